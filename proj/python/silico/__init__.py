"""Simulated-respondent survey engine: python bindings for the C++ core."""

from silico._silico import (
    AxisSpec,
    ClusterModel,
    OlsResult,
    ToyConditionalModel,
    __version__,
    axis_score,
    binomial_test,
    build_justification_prompt,
    calinski_harabasz,
    classify_sign,
    compose_priming,
    compose_prompt,
    cosine,
    davies_bouldin,
    expand_battery,
    kmeans,
    ols_binary,
    run_demo,
    select_k,
    sequence_probability,
    silhouette,
    truncate_to_sentence,
    two_proportion_test,
)

__all__ = [
    "AxisSpec",
    "ClusterModel",
    "OlsResult",
    "ToyConditionalModel",
    "__version__",
    "axis_score",
    "binomial_test",
    "build_justification_prompt",
    "calinski_harabasz",
    "classify_sign",
    "compose_priming",
    "compose_prompt",
    "cosine",
    "davies_bouldin",
    "expand_battery",
    "kmeans",
    "ols_binary",
    "run_demo",
    "select_k",
    "sequence_probability",
    "silhouette",
    "truncate_to_sentence",
    "two_proportion_test",
]
