"""Extraction of the advisor's ``line_id : busbar`` list from free text."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .prompt import MARKER

OK, NOOP, ERROR = "ok", "noop", "error"

_PAIR = re.compile(r"(-?\d+)\s*:\s*(-?\d+)")
_EMPTY = re.compile(r"^\s*(\{\s*\}|none\b|do[- ]nothing\b)", re.IGNORECASE)


@dataclass(frozen=True)
class AdvisorProposal:
    """Parsed advisor reply.

    ``status`` is ``ok`` with at least one valid pair, ``noop`` when the
    advisor explicitly proposes no change (``{}``, ``none``), and ``error``
    otherwise. ``rejected`` lists the pairs dropped and why.
    """

    raw_text: str
    changes: dict[int, int] = field(default_factory=dict)
    status: str = ERROR
    reason: str = ""
    rejected: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if bool(self.changes) != (self.status == OK):
            raise ValueError("changes must be non-empty exactly when status is ok")


def parse_proposal(text, line_ids=None) -> AdvisorProposal:
    """Parse the text after the last marker.

    Accepts ``str`` or ``bytes`` (decoded leniently). ``line_ids`` is the
    set of known lines; without it only busbar values are checked.
    """
    if isinstance(text, (bytes, bytearray)):
        text = bytes(text).decode("utf-8", errors="replace")
    text = str(text)
    pos = text.rfind(MARKER)
    if pos < 0:
        return AdvisorProposal(text, status=ERROR, reason="marker absent")
    tail = text[pos + len(MARKER):]
    # the pair list ends at the first closing brace or blank line
    head = tail.lstrip()
    if _EMPTY.match(head):
        return AdvisorProposal(text, status=NOOP, reason="no change proposed")
    body = re.split(r"\}|\n\s*\n", head, maxsplit=1)[0]

    changes: dict[int, int] = {}
    rejected = []
    for m in _PAIR.finditer(body):
        pair = m.group(0)
        line, bus = int(m.group(1)), int(m.group(2))
        if bus not in (0, 1):
            rejected.append((pair, "invalid busbar"))
        elif line_ids is not None and line not in line_ids:
            rejected.append((pair, "unknown line"))
        elif line in changes and changes[line] != bus:
            rejected.append((pair, "conflicting duplicate"))
        else:
            changes[line] = bus
    if not changes:
        reason = rejected[0][1] if rejected else "no line pairs"
        return AdvisorProposal(text, status=ERROR, reason=reason, rejected=tuple(rejected))
    return AdvisorProposal(text, changes, OK, rejected=tuple(rejected))
