"""Activation bookkeeping: which actors are idle, which are busy in overlays.

At any instant the actors split into two camps: the latent reserve L(t) of
idle actors available for enrollment, and the responding set R(t) of actors
currently playing a role inside some overlay community. Enrollment moves an
actor from L to R bound to one (role, overlay) pair; release moves it back.
The two sets partition the actor population at all times.

States are immutable values; enroll and release return updated copies. The
engine threads a single current state through the run.
"""

from __future__ import annotations

from dataclasses import dataclass

from .holarchy import Holarchy, HolonId, LogicalTime, RoleId, UnknownHolonError


class ActivationError(Exception):
    pass


class AlreadyActiveError(ActivationError):
    pass


class NotActiveError(ActivationError):
    pass


class IncapableRoleError(ActivationError):
    pass


class TooLargeError(ActivationError):
    """The activation space is too big to enumerate explicitly."""


ENUMERATION_ATOM_LIMIT = 20


@dataclass(frozen=True)
class Binding:
    """What an active actor is doing: which role, inside which overlay."""

    role: RoleId
    son_id: int


@dataclass(frozen=True)
class ActivationState:
    """Immutable snapshot of the L/R split at one logical time."""

    inactive: frozenset[HolonId]
    active: tuple[tuple[HolonId, Binding], ...]
    clock: LogicalTime = 0

    def binding_of(self, a: HolonId) -> Binding | None:
        for holon, binding in self.active:
            if holon == a:
                return binding
        return None

    def is_active(self, a: HolonId) -> bool:
        return self.binding_of(a) is not None


def initial_state(h: Holarchy) -> ActivationState:
    """All actors idle: L is the full actor population, R is empty."""
    return ActivationState(inactive=h.subtree_atoms(h.root), active=())


def enroll(
    state: ActivationState,
    h: Holarchy,
    a: HolonId,
    role: RoleId,
    son_id: int,
) -> ActivationState:
    """Move actor ``a`` from the latent reserve into overlay ``son_id``.

    Raises AlreadyActiveError when a is already enrolled somewhere,
    IncapableRoleError when a cannot play ``role``, and UnknownHolonError
    when a is not an actor of this holarchy.
    """
    node = h.holon(a)
    if not node.is_atomic:
        raise UnknownHolonError(f"holon {a} is composite; only actors enroll")
    if state.is_active(a):
        raise AlreadyActiveError(f"actor {a} is already enrolled")
    if a not in state.inactive:
        raise UnknownHolonError(f"actor {a} is not part of this activation state")
    if role not in node.capabilities:
        raise IncapableRoleError(f"actor {a} cannot play role {role}")
    return ActivationState(
        inactive=state.inactive - {a},
        active=state.active + ((a, Binding(role, son_id)),),
        clock=state.clock,
    )


def release(state: ActivationState, a: HolonId) -> ActivationState:
    """Return actor ``a`` from its overlay to the latent reserve."""
    binding = state.binding_of(a)
    if binding is None:
        raise NotActiveError(f"actor {a} is not enrolled anywhere")
    return ActivationState(
        inactive=state.inactive | {a},
        active=tuple(pair for pair in state.active if pair[0] != a),
        clock=state.clock,
    )


def partition(state: ActivationState) -> tuple[frozenset[HolonId], frozenset[HolonId]]:
    """The (L, R) split: latent reserve and responding set."""
    return state.inactive, frozenset(a for a, _ in state.active)


def check_partition(state: ActivationState, h: Holarchy) -> None:
    """Assert that L and R partition the actor population exactly.

    Raises ActivationError when the sets overlap, miss an actor, or contain
    a stranger; used by the engine's debug mode after every step.
    """
    latent, responding = partition(state)
    population = h.subtree_atoms(h.root)
    overlap = latent & responding
    if overlap:
        raise ActivationError(f"actors {sorted(overlap)} are both latent and responding")
    union = latent | responding
    if union != population:
        missing = sorted(population - union)
        strangers = sorted(union - population)
        raise ActivationError(f"partition broken: missing={missing} strangers={strangers}")
    if len(state.active) != len(responding):
        raise ActivationError("an actor appears in more than one overlay binding")


def enumerate_activation_space(h: Holarchy) -> int:
    """Count all role-assignment states of the actor population.

    Each actor is either idle or plays one of its capable roles, and actors
    choose independently, so the count is the product of (1 + |capabilities|)
    over all actors. Raises TooLargeError beyond the enumeration limit.
    """
    atoms = h.atoms()
    if len(atoms) > ENUMERATION_ATOM_LIMIT:
        raise TooLargeError(f"{len(atoms)} actors exceed the limit of {ENUMERATION_ATOM_LIMIT}")
    total = 1
    for a in atoms:
        total *= 1 + len(h.holons[a].capabilities)
    return total
