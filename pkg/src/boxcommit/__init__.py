"""Timing-aware correlation boxes and the bit commitment protocols built on them."""

from .corrbox import (
    OT,
    PR,
    GeneralBox,
    JointConditional,
    LocalBox,
    OTBox,
    PRBox,
    as_conditional,
    check_no_signalling,
    chsh_win_probability,
    ot_response,
    pr_response,
)
from .protocols import (
    CompositionConfig,
    build_commit_ot,
    build_commit_ot_simulated,
    build_commit_pr,
    get_protocol,
)
from .security import (
    composability_demo,
    delayed_alice,
    eval_binding,
    eval_correctness,
    eval_privacy,
    honest_alice,
    honest_bob,
    search_optimal_cheat,
    security_report,
)

__version__ = "0.1.0"
