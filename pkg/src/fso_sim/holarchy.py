"""Fractal node structure: holons, service-oriented communities, registries.

A holarchy is a tree of holons. Atomic holons are actors with role
capabilities; composite holons are service-oriented communities (SoCs) with
an ordered member list and a distinguished representative that stands for
the whole community one level up. Each SoC owns a registry holding the
service offers and published information visible at that level.

The structural part of a holarchy is immutable after :func:`build_holarchy`.
Registries are the mutable runtime surface; they are only ever touched by
the engine's single logical event loop. Structure changes (promotion of a
recurring overlay into a permanent SoC, pruning) produce a new ``Holarchy``
value, see :mod:`fso_sim.evolution`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator

HolonId = int
RoleId = int
LogicalTime = int


class HolarchyError(Exception):
    """Base class for structural errors."""


class DuplicateIdError(HolarchyError):
    pass


class CycleDetectedError(HolarchyError):
    """Membership is not a tree (cycle, shared member, or unreachable node)."""


class RepresentativeNotMemberError(HolarchyError):
    pass


class UnknownRoleError(HolarchyError):
    pass


class UnknownHolonError(HolarchyError):
    pass


class NotCompositeError(HolarchyError):
    pass


class MalformedHolonError(HolarchyError):
    """A holon's fields are inconsistent with its kind."""


class HolonKind(Enum):
    ATOMIC = "atomic"
    COMPOSITE = "composite"


class HolonOrigin(Enum):
    SCENARIO = "scenario"
    PERMANENTIFIED = "permanentified"


@dataclass(frozen=True)
class Holon:
    """A node that is both a whole and a part.

    Atomic holons carry capabilities and have no members. Composite holons
    (SoCs) carry an ordered member list and a representative drawn from it.
    """

    id: HolonId
    kind: HolonKind
    capabilities: frozenset[RoleId] = frozenset()
    members: tuple[HolonId, ...] = ()
    representative: HolonId | None = None
    origin: HolonOrigin = HolonOrigin.SCENARIO

    @property
    def is_atomic(self) -> bool:
        return self.kind is HolonKind.ATOMIC

    @property
    def is_composite(self) -> bool:
        return self.kind is HolonKind.COMPOSITE


@dataclass(frozen=True)
class ServiceEntry:
    """One service offer in a registry.

    ``via`` is the composite member whose subtree this entry punctualizes,
    or None for an offer registered directly by an atomic member. It exists
    so that evolution can retract exactly the entries it added.
    """

    provider: HolonId
    role: RoleId
    topics: frozenset[str] = frozenset()
    registered_at: LogicalTime = 0
    via: HolonId | None = None

    def sort_key(self) -> tuple[int, int, int]:
        return (self.registered_at, self.provider, self.role)


@dataclass(frozen=True)
class InformationItem:
    """A published piece of information, matched against activity guards."""

    topic: str
    payload: str
    source: HolonId
    published_at: LogicalTime


@dataclass
class Registry:
    """Per-SoC store of service offers and published information.

    Entries stay totally ordered by (registered_at, provider, role); this
    order is the canonical tie-break order everywhere.
    """

    owner: HolonId
    service_entries: list[ServiceEntry] = field(default_factory=list)
    info_entries: list[InformationItem] = field(default_factory=list)

    def topics_present(self) -> set[str]:
        return {item.topic for item in self.info_entries}

    def copy(self) -> "Registry":
        return Registry(self.owner, list(self.service_entries), list(self.info_entries))


@dataclass(frozen=True)
class HolonSpec:
    """Declarative description of one holon, as read from a scenario."""

    id: HolonId
    kind: HolonKind
    capabilities: tuple[RoleId, ...] = ()
    members: tuple[HolonId, ...] = ()
    representative: HolonId | None = None


@dataclass(frozen=True)
class HolarchySpec:
    """Declarative description of a whole holarchy plus the role table."""

    roles: frozenset[RoleId]
    holons: tuple[HolonSpec, ...]


@dataclass(frozen=True)
class Violation:
    """One broken structural invariant, as data rather than as an exception."""

    code: str
    holon: HolonId
    detail: str

    def __str__(self) -> str:
        return f"{self.code}({self.holon}): {self.detail}"


class Holarchy:
    """A validated holon tree with its per-SoC registries.

    ``parent`` maps every non-root holon to its primary enclosing SoC. A
    promoted (permanentified) SoC references its members secondarily: those
    member edges do not contribute to the parent map, so the primary
    structure stays a tree while actors may belong to several communities.
    """

    def __init__(
        self,
        holons: dict[HolonId, Holon],
        parent: dict[HolonId, HolonId],
        root: HolonId,
        roles: frozenset[RoleId],
        registries: dict[HolonId, Registry],
    ) -> None:
        self.holons = holons
        self.parent = parent
        self.root = root
        self.roles = roles
        self.registries = registries

    # -- basic queries -------------------------------------------------

    def holon(self, h: HolonId) -> Holon:
        try:
            return self.holons[h]
        except KeyError:
            raise UnknownHolonError(f"holon {h} does not exist") from None

    def atoms(self) -> tuple[HolonId, ...]:
        return tuple(sorted(i for i, n in self.holons.items() if n.is_atomic))

    def composites(self) -> tuple[HolonId, ...]:
        return tuple(sorted(i for i, n in self.holons.items() if n.is_composite))

    def depth(self) -> int:
        """Length in edges of the longest primary parent chain."""
        best = 0
        for i in self.holons:
            d = 0
            node = i
            while node in self.parent:
                node = self.parent[node]
                d += 1
            best = max(best, d)
        return best

    def chain_to_root(self, start: HolonId) -> tuple[HolonId, ...]:
        """start, parent(start), ..., root along primary edges."""
        self.holon(start)
        chain = [start]
        while chain[-1] in self.parent:
            chain.append(self.parent[chain[-1]])
        return tuple(chain)

    def subtree_atoms(self, h: HolonId) -> frozenset[HolonId]:
        """All atomic actors reachable through member edges from ``h``."""
        node = self.holon(h)
        if node.is_atomic:
            return frozenset({h})
        found: set[HolonId] = set()
        seen: set[HolonId] = set()
        stack = [h]
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            n = self.holon(current)
            if n.is_atomic:
                found.add(current)
            else:
                stack.extend(n.members)
        return frozenset(found)

    def subtree_capabilities(self, h: HolonId) -> frozenset[RoleId]:
        """Union of the capabilities of all actors under ``h``.

        For a composite this is the capability set it exposes through its
        representative: the community looks like one capable actor from
        one level up.
        """
        caps: set[RoleId] = set()
        for a in self.subtree_atoms(h):
            caps |= self.holons[a].capabilities
        return frozenset(caps)

    def registry_of(self, soc: HolonId) -> Registry:
        node = self.holon(soc)
        if not node.is_composite:
            raise NotCompositeError(f"holon {soc} is atomic and owns no registry")
        return self.registries[soc]

    def capabilities_of(self, a: HolonId) -> frozenset[RoleId]:
        node = self.holon(a)
        if node.is_atomic:
            return node.capabilities
        return self.subtree_capabilities(a)


def build_holarchy(spec: HolarchySpec) -> Holarchy:
    """Materialize and validate a holarchy from its declarative spec.

    Every composite receives an empty registry; initial service offers are
    registered separately with :func:`register_initial_services`.

    Raises DuplicateIdError, CycleDetectedError, RepresentativeNotMemberError,
    UnknownRoleError, UnknownHolonError, or MalformedHolonError when the
    description violates a structural invariant.
    """
    holons: dict[HolonId, Holon] = {}
    for hs in spec.holons:
        if hs.id < 0:
            raise MalformedHolonError(f"holon id {hs.id} is negative")
        if hs.id in holons:
            raise DuplicateIdError(f"holon id {hs.id} declared twice")
        if hs.kind is HolonKind.ATOMIC:
            if hs.members:
                raise MalformedHolonError(f"atomic holon {hs.id} lists members")
            if hs.representative is not None:
                raise MalformedHolonError(f"atomic holon {hs.id} names a representative")
            holons[hs.id] = Holon(hs.id, HolonKind.ATOMIC, frozenset(hs.capabilities))
        else:
            if hs.capabilities:
                raise MalformedHolonError(f"composite holon {hs.id} lists capabilities")
            if not hs.members:
                raise MalformedHolonError(f"composite holon {hs.id} has no members")
            rep = hs.representative if hs.representative is not None else min(hs.members)
            holons[hs.id] = Holon(hs.id, HolonKind.COMPOSITE, members=hs.members, representative=rep)

    for node in holons.values():
        for role in node.capabilities:
            if role not in spec.roles:
                raise UnknownRoleError(f"holon {node.id} claims undeclared role {role}")

    parent: dict[HolonId, HolonId] = {}
    for node in holons.values():
        if not node.is_composite:
            continue
        for m in node.members:
            if m not in holons:
                raise UnknownHolonError(f"SoC {node.id} lists unknown member {m}")
            if m in parent:
                raise CycleDetectedError(
                    f"holon {m} is a member of both {parent[m]} and {node.id}"
                )
            parent[m] = node.id
        if node.representative not in node.members:
            raise RepresentativeNotMemberError(
                f"representative {node.representative} is not a member of SoC {node.id}"
            )

    roots = [i for i in holons if i not in parent]
    if len(roots) != 1:
        raise CycleDetectedError(f"membership must have exactly one root, found {sorted(roots)}")
    root = roots[0]
    if not holons[root].is_composite:
        raise MalformedHolonError(f"root holon {root} must be a composite SoC")

    # reachability doubles as the cycle check: with single parents, every
    # unreachable node would sit on a cycle or under one
    reachable: set[HolonId] = set()
    stack = [root]
    while stack:
        current = stack.pop()
        if current in reachable:
            raise CycleDetectedError(f"membership cycle through holon {current}")
        reachable.add(current)
        stack.extend(holons[current].members)
    if reachable != set(holons):
        missing = sorted(set(holons) - reachable)
        raise CycleDetectedError(f"holons {missing} are not reachable from root {root}")

    registries = {i: Registry(owner=i) for i, n in holons.items() if n.is_composite}
    return Holarchy(holons, parent, root, spec.roles, registries)


def register_initial_services(h: Holarchy, t: LogicalTime = 0) -> None:
    """Fill every SoC registry with its members' service offers.

    Direct atomic members register one offer per capability. Composite
    members are punctualized: their representative appears as a proxy
    provider for every role available anywhere in the member's subtree.
    """
    for soc in h.composites():
        reg = h.registries[soc]
        entries: list[ServiceEntry] = []
        for m in h.holons[soc].members:
            member = h.holons[m]
            if member.is_atomic:
                for role in member.capabilities:
                    entries.append(ServiceEntry(m, role, registered_at=t))
            else:
                rep = member.representative
                assert rep is not None
                for role in h.subtree_capabilities(m):
                    entries.append(ServiceEntry(rep, role, registered_at=t, via=m))
        entries.sort(key=ServiceEntry.sort_key)
        reg.service_entries.extend(entries)


def higher_up_of(h: Holarchy, s: HolonId) -> HolonId | None:
    """The SoC enclosing composite ``s``, or None when ``s`` is the root."""
    node = h.holon(s)
    if not node.is_composite:
        raise NotCompositeError(f"holon {s} is atomic; only SoCs have higher-ups")
    return h.parent.get(s)


def visible_community_of(h: Holarchy, a: HolonId) -> frozenset[HolonId]:
    """The holons actor ``a`` can see: its community, one level, no further.

    That is the member set of a's primary enclosing SoC (the community's
    representative is itself a member, so it is always included). The root
    SoC has no enclosing community and sees only itself.
    """
    h.holon(a)
    if a not in h.parent:
        return frozenset({a})
    enclosing = h.holons[h.parent[a]]
    return frozenset(enclosing.members)


def validate(h: Holarchy) -> list[Violation]:
    """Check every structural invariant; violations come back as data.

    An empty list means the holarchy is sound. Unlike build_holarchy this
    never raises: it is meant for auditing a possibly corrupted value.
    """
    out: list[Violation] = []

    for i, node in h.holons.items():
        if node.id != i:
            out.append(Violation("IdMismatch", i, f"keyed {i} but carries id {node.id}"))
        if node.is_atomic:
            if node.members:
                out.append(Violation("AtomicWithMembers", i, "atomic holon lists members"))
            if node.representative is not None:
                out.append(Violation("AtomicWithRepresentative", i, "atomic holon names a representative"))
            for role in node.capabilities:
                if role not in h.roles:
                    out.append(Violation("UnknownRole", i, f"capability {role} not in role table"))
        else:
            if node.capabilities:
                out.append(Violation("CapabilityOnComposite", i, "composite holon lists capabilities"))
            if not node.members:
                out.append(Violation("EmptyComposite", i, "composite holon has no members"))
            if node.representative not in node.members:
                out.append(
                    Violation("RepresentativeNotMember", i, f"representative {node.representative} not a member")
                )
            for m in node.members:
                if m not in h.holons:
                    out.append(Violation("UnknownMember", i, f"member {m} does not exist"))

    # primary parent structure, recomputed from raw member lists: only
    # scenario-original SoCs contribute parental edges
    primary_parents: dict[HolonId, list[HolonId]] = {i: [] for i in h.holons}
    for i, node in h.holons.items():
        if node.is_composite and node.origin is HolonOrigin.SCENARIO:
            for m in node.members:
                if m in primary_parents:
                    primary_parents[m].append(i)
    roots = [i for i, ps in primary_parents.items() if not ps]
    for i, ps in primary_parents.items():
        if len(ps) > 1:
            out.append(Violation("MultipleParents", i, f"contained by SoCs {sorted(ps)}"))
    if len(roots) != 1:
        out.append(Violation("RootCount", h.root, f"expected one root, found {sorted(roots)}"))
    else:
        if roots[0] != h.root:
            out.append(Violation("RootMismatch", h.root, f"recorded root differs from structural root {roots[0]}"))
        seen: set[HolonId] = set()
        stack = [roots[0]]
        cyclic = False
        while stack and not cyclic:
            current = stack.pop()
            if current in seen:
                out.append(Violation("MembershipCycle", current, "holon revisited walking member edges"))
                cyclic = True
                break
            seen.add(current)
            node = h.holons.get(current)
            if node is not None and node.is_composite and node.origin is HolonOrigin.SCENARIO:
                stack.extend(m for m in node.members if m in h.holons)
        if not cyclic:
            for i, ps in primary_parents.items():
                if ps and i not in seen:
                    out.append(Violation("Unreachable", i, "not reachable from the root via primary edges"))

    # permanentified SoCs are leaf composites over existing atoms
    for i, node in h.holons.items():
        if node.is_composite and node.origin is HolonOrigin.PERMANENTIFIED:
            for m in node.members:
                member = h.holons.get(m)
                if member is None or not member.is_atomic:
                    out.append(Violation("NonAtomicOverlayMember", i, f"member {m} is not an existing actor"))

    # parent map consistency with member lists
    for child, p in h.parent.items():
        pnode = h.holons.get(p)
        if pnode is None or not pnode.is_composite or child not in pnode.members:
            out.append(Violation("ParentMapInconsistent", child, f"recorded parent {p} does not list it"))

    out.extend(_validate_registries(h))
    return out


def _validate_registries(h: Holarchy) -> list[Violation]:
    out: list[Violation] = []
    for soc, reg in h.registries.items():
        node = h.holons.get(soc)
        if node is None or not node.is_composite:
            out.append(Violation("RegistryOwnerInvalid", soc, "registry owner is not a composite holon"))
            continue
        members = set(node.members)
        rep_of_member = {
            h.holons[m].representative: m
            for m in node.members
            if m in h.holons and h.holons[m].is_composite
        }
        for entry in reg.service_entries:
            if entry.provider not in members and entry.provider not in rep_of_member:
                out.append(
                    Violation(
                        "ProviderNotMember",
                        soc,
                        f"provider {entry.provider} is neither a direct member nor a member's representative",
                    )
                )
        keys = [e.sort_key() for e in reg.service_entries]
        if keys != sorted(keys):
            out.append(Violation("RegistryOrder", soc, "service entries out of canonical order"))
        times = [item.published_at for item in reg.info_entries]
        if any(a > b for a, b in zip(times, times[1:])):
            out.append(Violation("InfoOrder", soc, "info entries not monotone in published_at"))

        # punctualization: once anything is registered, every composite
        # member with a non-empty subtree capability set must appear
        # through its representative
        if reg.service_entries:
            for m in node.members:
                member = h.holons.get(m)
                if member is None or not member.is_composite:
                    continue
                if not h.subtree_capabilities(m):
                    continue
                if not any(e.via == m for e in reg.service_entries):
                    out.append(
                        Violation("RepresentativeNotRegistered", soc, f"composite member {m} has no proxy entries")
                    )
    return out


def spec_of(h: Holarchy) -> HolarchySpec:
    """Recover the declarative spec of the scenario-original structure."""
    holons = []
    for i in sorted(h.holons):
        node = h.holons[i]
        if node.origin is not HolonOrigin.SCENARIO:
            continue
        if node.is_atomic:
            holons.append(HolonSpec(i, HolonKind.ATOMIC, capabilities=tuple(sorted(node.capabilities))))
        else:
            members = tuple(
                m for m in node.members
                if h.holons[m].origin is HolonOrigin.SCENARIO
            )
            holons.append(
                HolonSpec(i, HolonKind.COMPOSITE, members=members, representative=node.representative)
            )
    return HolarchySpec(roles=h.roles, holons=tuple(holons))
