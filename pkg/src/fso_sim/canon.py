"""The canon: how a community answers published events.

Each SoC applies the same two rules. The representative rule: when an event
arrives, find a response activity whose trigger matches, and try to staff
its required roles from the providers visible in the local registry. The
exception rule: when staffing fails, escalate the request to the higher-up
community, which retries with its wider view; at the root the request is
unresolvable.

A successful resolution yields a plan for a temporary overlay community
(a SON) that enrolls the chosen actors for the activity's duration and may
span several SoCs. Everything here is deterministic: candidates are ranked
by registration order then id, and role slots are filled with the
lexicographically least workable assignment.
"""

from __future__ import annotations

from dataclasses import dataclass

from .activation import ActivationState, enroll, release
from .holarchy import (
    Holarchy,
    HolonId,
    InformationItem,
    LogicalTime,
    Registry,
    RoleId,
    higher_up_of,
)

# stands in for a missing data topic inside a missing-roles list; never a
# real role id, never enrollable
DATA_MISSING = -1


class CanonError(Exception):
    pass


class UnknownTopicError(CanonError):
    pass


class PublishOrderError(CanonError):
    """Information must be published with monotone timestamps."""


class UnknownSocError(CanonError):
    pass


class StaleAssignmentError(CanonError):
    """A planned participant was no longer idle at formation time."""


class PrematureDissolveError(CanonError):
    pass


class BindingMismatchError(CanonError):
    """A member's recorded binding does not match the dissolving SON."""


@dataclass(frozen=True)
class ResponseActivity:
    """A guarded reaction: trigger topics, role slots to staff, data needs.

    ``required_roles`` is a multiset kept as a sorted tuple; the same role
    can appear several times and then needs that many distinct actors.
    """

    id: int
    trigger_topics: frozenset[str]
    required_roles: tuple[RoleId, ...]
    required_data: frozenset[str] = frozenset()
    duration: int = 1

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError(f"activity id {self.id} is negative")
        if not self.trigger_topics:
            raise ValueError(f"activity {self.id} has no trigger topics")
        if not self.required_roles:
            raise ValueError(f"activity {self.id} requires no roles")
        if tuple(sorted(self.required_roles)) != self.required_roles:
            object.__setattr__(self, "required_roles", tuple(sorted(self.required_roles)))
        if self.duration < 1:
            raise ValueError(f"activity {self.id} has non-positive duration")


@dataclass(frozen=True)
class ActivityTable:
    """All response activities of a scenario plus any extra known topics."""

    activities: tuple[ResponseActivity, ...]
    extra_topics: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        ids = [a.id for a in self.activities]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate activity ids")
        if ids != sorted(ids):
            object.__setattr__(self, "activities", tuple(sorted(self.activities, key=lambda a: a.id)))

    @property
    def known_topics(self) -> frozenset[str]:
        topics: set[str] = set(self.extra_topics)
        for a in self.activities:
            topics |= a.trigger_topics
            topics |= a.required_data
        return frozenset(topics)

    def by_id(self, activity_id: int) -> ResponseActivity:
        for a in self.activities:
            if a.id == activity_id:
                return a
        raise CanonError(f"no activity with id {activity_id}")

    def triggered_by(self, topic: str) -> tuple[ResponseActivity, ...]:
        return tuple(a for a in self.activities if topic in a.trigger_topics)


@dataclass(frozen=True)
class RoleRequest:
    """A staffing request wandering up the holarchy."""

    activity: int
    missing: tuple[int, ...]
    soc: HolonId
    hop_count: int
    issued_at: LogicalTime


@dataclass(frozen=True)
class Forwarded:
    request: RoleRequest


@dataclass(frozen=True)
class Unresolvable:
    request: RoleRequest


@dataclass(frozen=True)
class Enabled:
    """Guard satisfied; assignment pairs each role slot with an actor."""

    assignment: tuple[tuple[HolonId, RoleId], ...]


@dataclass(frozen=True)
class Missing:
    """Guard failed; which role slots (or data gaps) stay uncovered."""

    missing: tuple[int, ...]


@dataclass(frozen=True)
class HopRecord:
    """One escalation step, kept for the trace."""

    from_soc: HolonId
    to_soc: HolonId
    hop: int
    missing: tuple[int, ...]


@dataclass(frozen=True)
class SonPlan:
    """A workable response: who plays what, and which SoC finally managed."""

    activity_id: int
    assignment: tuple[tuple[HolonId, RoleId], ...]
    spanned_socs: frozenset[HolonId]
    origin_soc: HolonId
    resolved_soc: HolonId
    hop_count: int
    duration: int
    hops: tuple[HopRecord, ...] = ()


@dataclass(frozen=True)
class Unresolved:
    """No chain prefix could staff the request, root included."""

    activity_id: int
    origin_soc: HolonId
    hop_count: int
    missing: tuple[int, ...]
    hops: tuple[HopRecord, ...] = ()


@dataclass(frozen=True)
class Son:
    """A live temporary overlay community answering one activity instance."""

    id: int
    activity: int
    request: int
    members: tuple[tuple[HolonId, RoleId], ...]
    spanned_socs: frozenset[HolonId]
    formed_at: LogicalTime
    dissolves_at: LogicalTime


def publish(
    reg: Registry,
    item: InformationItem,
    table: ActivityTable,
) -> tuple[ResponseActivity, ...]:
    """Append ``item`` to the registry and return the activities it triggers.

    Raises UnknownTopicError for a topic no activity or scenario declares,
    and PublishOrderError when timestamps would run backwards.
    """
    if item.topic not in table.known_topics:
        raise UnknownTopicError(f"topic {item.topic!r} is not declared anywhere")
    if reg.info_entries and item.published_at < reg.info_entries[-1].published_at:
        raise PublishOrderError(
            f"publish at t={item.published_at} after t={reg.info_entries[-1].published_at}"
        )
    reg.info_entries.append(item)
    return table.triggered_by(item.topic)


# -- candidate pools --------------------------------------------------------


def _pool_from_chain(
    h: Holarchy,
    chain: tuple[HolonId, ...],
    state: ActivationState,
) -> dict[tuple[HolonId, RoleId], tuple[int, int]]:
    """Collect idle candidate actors visible from a chain of SoC registries.

    Direct entries contribute their provider; punctualized entries are
    unfolded into the member subtree they stand for. Key per (actor, role)
    is (registered_at, actor), kept minimal across duplicates; it decides
    candidate precedence.
    """
    pool: dict[tuple[HolonId, RoleId], tuple[int, int]] = {}

    def offer(a: HolonId, role: RoleId, registered_at: int) -> None:
        if a not in state.inactive:
            return
        if role not in h.holons[a].capabilities:
            return
        key = (registered_at, a)
        slot = (a, role)
        if slot not in pool or key < pool[slot]:
            pool[slot] = key

    for soc in chain:
        for entry in h.registries[soc].service_entries:
            if entry.via is None:
                provider = h.holons.get(entry.provider)
                if provider is not None and provider.is_atomic:
                    offer(entry.provider, entry.role, entry.registered_at)
            else:
                for a in sorted(h.subtree_atoms(entry.via)):
                    offer(a, entry.role, entry.registered_at)
    return pool


def _data_on_chain(h: Holarchy, chain: tuple[HolonId, ...]) -> set[str]:
    present: set[str] = set()
    for soc in chain:
        present |= h.registries[soc].topics_present()
    return present


# -- role slot matching ------------------------------------------------------


def _candidates_per_slot(
    slots: tuple[RoleId, ...],
    pool: dict[tuple[HolonId, RoleId], tuple[int, int]],
) -> list[list[HolonId]]:
    per_slot: list[list[HolonId]] = []
    for role in slots:
        ranked = sorted(
            (key, a) for (a, r), key in pool.items() if r == role
        )
        per_slot.append([a for _, a in ranked])
    return per_slot


def _can_complete(
    per_slot: list[list[HolonId]],
    pending: list[int],
    taken: set[HolonId],
) -> bool:
    """Is there a perfect matching of the pending slots onto free actors?"""
    match_of_actor: dict[HolonId, int] = {}

    def augment(i: int, visited: set[HolonId]) -> bool:
        for a in per_slot[i]:
            if a in taken or a in visited:
                continue
            visited.add(a)
            j = match_of_actor.get(a)
            if j is None or augment(j, visited):
                match_of_actor[a] = i
                return True
        return False

    for i in pending:
        if not augment(i, set()):
            return False
    return True


def _solve(
    activity: ResponseActivity,
    pool: dict[tuple[HolonId, RoleId], tuple[int, int]],
    available_data: set[str],
) -> Enabled | Missing:
    """Staff the activity's role slots from the pool, or say what is missing.

    Slots are filled in sorted role order with the smallest-ranked actor
    that still leaves the rest completable, which makes the chosen
    assignment the lexicographically least perfect matching. When no
    perfect matching exists the uncoverable slots are reported, greedily:
    slots kept while a matching still extends over them form a maximum one.
    """
    slots = activity.required_roles
    per_slot = _candidates_per_slot(slots, pool)

    missing_roles: list[int] = []
    coverable: list[int] = []
    for i in range(len(slots)):
        if _can_complete(per_slot, coverable + [i], set()):
            coverable.append(i)
        else:
            missing_roles.append(slots[i])

    missing_data = sorted(activity.required_data - available_data)

    if missing_roles or missing_data:
        return Missing(tuple(missing_roles) + (DATA_MISSING,) * len(missing_data))

    assignment: list[tuple[HolonId, RoleId]] = []
    taken: set[HolonId] = set()
    for i, role in enumerate(slots):
        rest = list(range(i + 1, len(slots)))
        chosen = None
        for a in per_slot[i]:
            if a in taken:
                continue
            if _can_complete(per_slot, rest, taken | {a}):
                chosen = a
                break
        assert chosen is not None, "perfect matching vanished mid-assignment"
        taken.add(chosen)
        assignment.append((chosen, role))
    return Enabled(tuple(assignment))


# -- the two canon rules -----------------------------------------------------


def evaluate_guard(
    activity: ResponseActivity,
    reg: Registry,
    state: ActivationState,
    h: Holarchy,
) -> Enabled | Missing:
    """Representative rule at a single SoC: can this community staff it alone?"""
    chain = (reg.owner,)
    pool = _pool_from_chain(h, chain, state)
    return _solve(activity, pool, _data_on_chain(h, chain))


def raise_exception(request: RoleRequest, h: Holarchy) -> Forwarded | Unresolvable:
    """Exception rule: pass the unstaffed request one community up."""
    node = h.holons.get(request.soc)
    if node is None or not node.is_composite:
        raise UnknownSocError(f"request sits at {request.soc}, which is not a SoC")
    above = higher_up_of(h, request.soc)
    if above is None:
        return Unresolvable(request)
    return Forwarded(
        RoleRequest(
            activity=request.activity,
            missing=request.missing,
            soc=above,
            hop_count=request.hop_count + 1,
            issued_at=request.issued_at,
        )
    )


def resolve_request(
    activity: ResponseActivity,
    start_soc: HolonId,
    h: Holarchy,
    state: ActivationState,
    issued_at: LogicalTime = 0,
) -> SonPlan | Unresolved:
    """Run the canon from ``start_soc`` upward until staffed or exhausted.

    Each escalation widens the view: the community at hop k works with the
    registries of the whole visited chain, so information published below
    stays usable above. Escalation hops are recorded for the trace.
    """
    node = h.holons.get(start_soc)
    if node is None or not node.is_composite:
        raise UnknownSocError(f"cannot resolve from {start_soc}, which is not a SoC")

    full_chain = h.chain_to_root(start_soc)
    hops: list[HopRecord] = []
    outcome: Missing | None = None
    for k, soc in enumerate(full_chain):
        visited = full_chain[: k + 1]
        pool = _pool_from_chain(h, visited, state)
        result = _solve(activity, pool, _data_on_chain(h, visited))
        if isinstance(result, Enabled):
            spanned = {start_soc}
            for a, _ in result.assignment:
                spanned.add(h.parent[a])
            return SonPlan(
                activity_id=activity.id,
                assignment=result.assignment,
                spanned_socs=frozenset(spanned),
                origin_soc=start_soc,
                resolved_soc=soc,
                hop_count=k,
                duration=activity.duration,
                hops=tuple(hops),
            )
        outcome = result
        request = RoleRequest(activity.id, result.missing, soc, k, issued_at)
        escalation = raise_exception(request, h)
        if isinstance(escalation, Unresolvable):
            break
        hops.append(HopRecord(soc, escalation.request.soc, escalation.request.hop_count, result.missing))

    assert outcome is not None
    return Unresolved(
        activity_id=activity.id,
        origin_soc=start_soc,
        hop_count=len(full_chain) - 1,
        missing=outcome.missing,
        hops=tuple(hops),
    )


# -- overlay lifecycle -------------------------------------------------------


def form_son(
    plan: SonPlan,
    son_id: int,
    request_id: int,
    t: LogicalTime,
    state: ActivationState,
    h: Holarchy,
) -> tuple[Son, ActivationState]:
    """Enroll the planned members and open the overlay community.

    Raises StaleAssignmentError when some planned actor is busy by now; the
    caller should re-resolve instead of forcing the plan.
    """
    current = state
    for a, role in plan.assignment:
        if current.is_active(a):
            raise StaleAssignmentError(f"actor {a} became busy before SON {son_id} formed")
        current = enroll(current, h, a, role, son_id)
    son = Son(
        id=son_id,
        activity=plan.activity_id,
        request=request_id,
        members=plan.assignment,
        spanned_socs=plan.spanned_socs,
        formed_at=t,
        dissolves_at=t + plan.duration,
    )
    return son, current


def dissolve_son(son: Son, t: LogicalTime, state: ActivationState) -> ActivationState:
    """Close the overlay on schedule, returning every member to the reserve."""
    if t != son.dissolves_at:
        raise PrematureDissolveError(f"SON {son.id} dissolves at {son.dissolves_at}, not {t}")
    current = state
    for a, role in son.members:
        binding = current.binding_of(a)
        if binding is None or binding.son_id != son.id or binding.role != role:
            raise BindingMismatchError(f"actor {a} is not bound to SON {son.id} as role {role}")
        current = release(current, a)
    return current
