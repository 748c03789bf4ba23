"""Self-paced sample reweighting for network inference from noisy measurements."""

from .enhance import ManieConfig, ManieResult, init_lambda, otsu_lambda, run_manie, update_weights
from .graphgen import Network, gen_ba, gen_er, gen_nw, gen_ws, load_edge_list, load_fixture
from .metrics import EvalReport, auc, neg_log2

__all__ = [
    "EvalReport",
    "ManieConfig",
    "ManieResult",
    "Network",
    "auc",
    "gen_ba",
    "gen_er",
    "gen_nw",
    "gen_ws",
    "init_lambda",
    "load_edge_list",
    "load_fixture",
    "neg_log2",
    "otsu_lambda",
    "run_manie",
    "update_weights",
]
