"""Pure functions over run traces: bounds, certificates, rate fits, comparisons, lemma checks."""

from src.metrics.bounds import BoundTerms, theorem_bound, theorem_bound_terms
from src.metrics.certificate import TheoremCertificate, certificate_from_traces, certify
from src.metrics.comparison import COMPARISON_COLUMNS, compare, summarize_traces
from src.metrics.lemmas import LemmaCheck, VerifyReport, verify_suite
from src.metrics.ratefit import RateFit, rate_fit

__all__ = [
    "BoundTerms", "theorem_bound", "theorem_bound_terms",
    "TheoremCertificate", "certificate_from_traces", "certify",
    "COMPARISON_COLUMNS", "compare", "summarize_traces",
    "LemmaCheck", "VerifyReport", "verify_suite",
    "RateFit", "rate_fit",
]
