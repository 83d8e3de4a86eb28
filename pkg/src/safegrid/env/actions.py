"""Topology actions: busbar reassignments confined to one substation."""

from __future__ import annotations

from dataclasses import dataclass

from ..grid.case import GridCase, split_key


@dataclass(frozen=True)
class Action:
    """Map of element key to target busbar; the empty map is do-nothing."""

    changes: tuple[tuple[str, int], ...] = ()

    @classmethod
    def from_mapping(cls, mapping: dict[str, int]) -> "Action":
        return cls(tuple(sorted((str(k), int(v)) for k, v in mapping.items())))

    @classmethod
    def do_nothing(cls) -> "Action":
        return cls(())

    @property
    def is_do_nothing(self) -> bool:
        return not self.changes

    def as_dict(self) -> dict[str, int]:
        return dict(self.changes)

    def keys(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.changes)

    def substations(self, case: GridCase) -> set[int]:
        return {case.element_substation(k) for k, _ in self.changes}

    def describe(self) -> str:
        """Render as ``line : busbar`` pairs; non-line elements keep their kind."""
        if self.is_do_nothing:
            return "do-nothing"
        parts = []
        for key, bb in self.changes:
            kind, ident = split_key(key)
            if kind.startswith("line"):
                parts.append(f"{ident} : {bb}")
            else:
                parts.append(f"{kind} {ident} : {bb}")
        return "{" + ", ".join(parts) + "}"


def canonical(action: Action, case: GridCase) -> Action:
    """Relabel busbars so the first element of the substation sits on busbar 0.

    Swapping the two busbar labels of a substation is electrically neutral,
    so the canonical form identifies equivalent set-actions.
    """
    if action.is_do_nothing:
        return action
    (sub,) = action.substations(case)
    first = case.substation_elements(sub)[0]
    mapping = action.as_dict()
    if first in mapping and mapping[first] == 1:
        mapping = {k: 1 - v for k, v in mapping.items()}
    return Action.from_mapping(mapping)


def enumerate_actions(case: GridCase) -> list[Action]:
    """Do-nothing plus every busbar configuration of each operable substation.

    Configurations are full set-actions over the substation's elements with
    the first element pinned to busbar 0, so each electrically distinct
    split appears once (including the all-on-busbar-0 merge).
    """
    actions = [Action.do_nothing()]
    for sub in case.controllable_substations:
        elements = case.substation_elements(sub)
        if len(elements) < 2:
            continue
        for mask in range(2 ** (len(elements) - 1)):
            mapping = {elements[0]: 0}
            for i, key in enumerate(elements[1:]):
                mapping[key] = (mask >> i) & 1
            actions.append(Action.from_mapping(mapping))
    return actions


def full_configuration(
    case: GridCase, sub: int, busbars: dict[str, int], overrides: dict[str, int]
) -> Action:
    """Set-action over all elements of ``sub``: current busbars plus overrides."""
    mapping = {k: busbars[k] for k in case.substation_elements(sub)}
    mapping.update(overrides)
    return canonical(Action.from_mapping(mapping), case)
