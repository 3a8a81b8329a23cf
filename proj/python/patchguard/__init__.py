"""Static assessment of program repair patches.

Thin Python surface over the C++ core: parse Java sources, compute edit
scripts, extract the feature vector of a patch, and train or evaluate the
boosted overfitting classifier.
"""

from ._patchguard import (
    Ast,
    CorpusNotFound,
    Dataset,
    EditScript,
    EmptyDataset,
    Error,
    EvalReport,
    Model,
    ParseError,
    SchemaMismatch,
    SingleClass,
    TooFewMinority,
    UnknownGrammar,
    __version__,
    apply,
    catalog_json,
    diff,
    diff_text,
    encode_features,
    extract_corpus,
    extract_features,
    kfold,
    leave_one_group_out,
    metrics,
    parse,
    prune_outliers,
    raw_feature_count,
    schema_columns,
    smote,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
