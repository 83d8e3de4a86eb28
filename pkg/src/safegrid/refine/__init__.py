from .advisors import (
    AdvisorError,
    MockAdvisor,
    RemoteAdvisor,
    RuleBasedAdvisor,
    advise_rule_based,
    rank_candidates,
)
from .buffer import BufferUsageError, ReplayBuffer
from .config import RefinementConfig
from .parse import ERROR, NOOP, OK, AdvisorProposal, parse_proposal
from .prompt import MARKER, build_prompt, severity
from .protocol import (
    CycleStats,
    RefineResult,
    RoundRecord,
    improves,
    proposal_to_action,
    refine,
    refine_buffer,
    select_candidates,
)

__all__ = [
    "AdvisorError", "MockAdvisor", "RemoteAdvisor", "RuleBasedAdvisor",
    "advise_rule_based", "rank_candidates", "BufferUsageError", "ReplayBuffer",
    "RefinementConfig", "ERROR", "NOOP", "OK", "AdvisorProposal", "parse_proposal",
    "MARKER", "build_prompt", "severity", "CycleStats", "RefineResult", "RoundRecord",
    "improves", "proposal_to_action", "refine", "refine_buffer", "select_candidates",
]
