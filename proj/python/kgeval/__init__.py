"""Typed knowledge-graph embeddings: training, link prediction, clustering
evaluation and protocol correlation.

The heavy lifting lives in the compiled `_kge` module; this package re-exports
its surface.
"""

try:
    # installed wheel: the extension lives inside the package
    from ._kge import (  # noqa: F401
        DataError,
        KnowledgeGraph,
        Model,
        NumericError,
        __version__,
        derive_labels,
        evaluate_cep,
        evaluate_lp,
        generate,
        init_model,
        kmeans,
        load_kg,
        load_model,
        parse_and_split,
        pearson,
        run_sweep,
        spearman,
        train,
    )
except ImportError:
    # development tree: the extension is on PYTHONPATH from the build dir
    from _kge import (  # noqa: F401
        DataError,
        KnowledgeGraph,
        Model,
        NumericError,
        __version__,
        derive_labels,
        evaluate_cep,
        evaluate_lp,
        generate,
        init_model,
        kmeans,
        load_kg,
        load_model,
        parse_and_split,
        pearson,
        run_sweep,
        spearman,
        train,
    )

__all__ = [
    "DataError",
    "KnowledgeGraph",
    "Model",
    "NumericError",
    "__version__",
    "derive_labels",
    "evaluate_cep",
    "evaluate_lp",
    "generate",
    "init_model",
    "kmeans",
    "load_kg",
    "load_model",
    "parse_and_split",
    "pearson",
    "run_sweep",
    "spearman",
    "train",
]
