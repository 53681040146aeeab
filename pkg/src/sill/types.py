"""Session type representation: the stratified grammar and named definitions.

Types live in two layers. A shared type is always an upshift of a linear
type (``UpSL``); linear types are built from the multiplicative unit,
channel input/output, labelled choices, value input/output, the purely
linear shifts, and the downshift back into the shared layer. Recursion is
expressed through named definitions (``Ref``), never through binders, so
every validated environment denotes a finite system of regular trees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property


# --------------------------------------------------------------------------- #
# Session types
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class One:
    """Terminated session: provider closes, client waits."""


@dataclass(frozen=True)
class Tensor:
    """Provider sends a channel of (at most) the payload type, continues as cont."""
    payload: "SessionType"
    cont: "SessionType"


@dataclass(frozen=True)
class Lolli:
    """Provider receives a channel of the payload type, continues as cont."""
    payload: "SessionType"
    cont: "SessionType"


@dataclass(frozen=True)
class IChoice:
    """Internal choice: provider picks one of the labelled branches."""
    branches: tuple[tuple[str, "SessionType"], ...]

    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.branches)

    def branch(self, label: str) -> "SessionType":
        for l, t in self.branches:
            if l == label:
                return t
        raise KeyError(label)


@dataclass(frozen=True)
class EChoice:
    """External choice: client picks one of the labelled branches."""
    branches: tuple[tuple[str, "SessionType"], ...]

    labels = IChoice.labels
    branch = IChoice.branch


@dataclass(frozen=True)
class UpSL:
    """Shared-layer constructor: acquire point guarding a linear body."""
    cont: "SessionType"


@dataclass(frozen=True)
class DownSL:
    """Release point: the session returns to the shared type cont."""
    cont: "SessionType"


@dataclass(frozen=True)
class UpLL:
    """Purely linear synchronization point (supertype of UpSL)."""
    cont: "SessionType"


@dataclass(frozen=True)
class DownLL:
    """Purely linear release point (supertype of DownSL)."""
    cont: "SessionType"


@dataclass(frozen=True)
class ValIn:
    """Client sends a base-typed value, session continues as cont."""
    base: str
    cont: "SessionType"


@dataclass(frozen=True)
class ValOut:
    """Provider sends a base-typed value, session continues as cont."""
    base: str
    cont: "SessionType"


@dataclass(frozen=True)
class Ref:
    """Reference to a named definition; the only source of recursion."""
    name: str


SessionType = (
    One | Tensor | Lolli | IChoice | EChoice
    | UpSL | DownSL | UpLL | DownLL | ValIn | ValOut | Ref
)

SHARED = "shared"
LINEAR = "linear"


# --------------------------------------------------------------------------- #
# Constraints
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class Bot:
    """A channel that will never become available again."""


@dataclass(frozen=True)
class Top:
    """A channel with no release obligation (not acquired yet)."""


@dataclass(frozen=True)
class SharedC:
    """A concrete shared type as a release obligation."""
    ty: SessionType


ConstraintType = Bot | Top | SharedC

BOT = Bot()
TOP = Top()


# --------------------------------------------------------------------------- #
# Definition environments
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class TypeDef:
    name: str
    modality: str  # SHARED or LINEAR
    body: SessionType


@dataclass(frozen=True)
class TypeDefEnv:
    defs: tuple[TypeDef, ...] = ()

    @cached_property
    def _table(self) -> dict[str, TypeDef]:
        return {d.name: d for d in self.defs}

    def __contains__(self, name: str) -> bool:
        return name in self._table

    def lookup(self, name: str) -> TypeDef:
        try:
            return self._table[name]
        except KeyError:
            raise KeyError(f"undefined type name: {name}") from None

    def extend(self, *new: TypeDef) -> "TypeDefEnv":
        return TypeDefEnv(self.defs + tuple(new))

    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.defs)


class TypeError_(Exception):
    """Raised for operations on malformed environments."""


def children(t: SessionType) -> tuple[SessionType, ...]:
    """Immediate structural subterms, payloads included."""
    match t:
        case Tensor(p, c) | Lolli(p, c):
            return (p, c)
        case IChoice(bs) | EChoice(bs):
            return tuple(ty for _, ty in bs)
        case UpSL(c) | DownSL(c) | UpLL(c) | DownLL(c) | ValIn(_, c) | ValOut(_, c):
            return (c,)
        case _:
            return ()


def unfold(env: TypeDefEnv, t: SessionType) -> SessionType:
    """Resolve name references until a structural constructor appears.

    Total on validated environments by contractivity.
    """
    seen = set()
    while isinstance(t, Ref):
        if t.name in seen:
            raise TypeError_(f"non-contractive cycle through {t.name}")
        seen.add(t.name)
        t = env.lookup(t.name).body
    return t


def modality(env: TypeDefEnv, t: SessionType) -> str:
    """A type is shared exactly when it unfolds to an upshift out of the
    linear layer."""
    return SHARED if isinstance(unfold(env, t), UpSL) else LINEAR


def reachable(env: TypeDefEnv, t: SessionType) -> frozenset[SessionType]:
    """Every type encountered from t by unfolding and taking subterms.

    Finite for validated environments; witnesses regularity.
    """
    seen: set[SessionType] = set()
    stack = [t]
    while stack:
        cur = stack.pop()
        if cur in seen:
            continue
        seen.add(cur)
        if isinstance(cur, Ref):
            stack.append(env.lookup(cur.name).body)
        else:
            stack.extend(children(cur))
    return frozenset(seen)


def validate_env(env: TypeDefEnv) -> list[str]:
    """Check closure, contractivity, stratification, and label distinctness.

    Returns one diagnostic string per violation; an empty list means the
    environment is well formed.
    """
    diags: list[str] = []
    names = set()
    for d in env.defs:
        if d.name in names:
            diags.append(f"duplicate definition: {d.name}")
        names.add(d.name)

    # closure
    def refs_of(t: SessionType, acc: set[str]) -> None:
        if isinstance(t, Ref):
            acc.add(t.name)
        for c in children(t):
            refs_of(c, acc)

    for d in env.defs:
        used: set[str] = set()
        refs_of(d.body, used)
        for n in sorted(used - names):
            diags.append(f"undefined reference: {n} in {d.name}")
    if diags:
        return diags

    # contractivity: name-to-name chains must not cycle
    chain = {d.name: d.body.name for d in env.defs if isinstance(d.body, Ref)}
    for start in chain:
        slow = start
        path = []
        while slow in chain:
            if slow in path:
                diags.append(f"non-contractive: {' -> '.join(path + [slow])}")
                break
            path.append(slow)
            slow = chain[slow]

    # stratification and label distinctness
    def walk(t: SessionType, defname: str, where: str, top_shared: bool) -> None:
        match t:
            case UpSL(c):
                if not top_shared:
                    diags.append(
                        f"stratification: up-shift not at the top of a shared "
                        f"definition ({defname}, {where})")
                walk(c, defname, where + "/up_s", False)
            case DownSL(c):
                # the continuation must land back in the shared layer
                try:
                    if modality(env, c) != SHARED:
                        diags.append(
                            f"stratification: down-shift to a non-shared type "
                            f"({defname}, {where})")
                except (KeyError, TypeError_):
                    pass
                walk(c, defname, where + "/down_s", True)
            case IChoice(bs) | EChoice(bs):
                seen_labels = set()
                for l, ty in bs:
                    if l in seen_labels:
                        diags.append(f"duplicate label {l} ({defname}, {where})")
                    seen_labels.add(l)
                    walk(ty, defname, f"{where}/{l}", False)
                if not bs:
                    diags.append(f"empty choice ({defname}, {where})")
            case Tensor(p, c) | Lolli(p, c):
                walk(p, defname, where + "/payload", True)
                walk(c, defname, where + "/cont", False)
            case UpLL(c) | DownLL(c) | ValIn(_, c) | ValOut(_, c):
                try:
                    if modality(env, c) != LINEAR:
                        diags.append(
                            f"stratification: linear constructor with shared "
                            f"continuation ({defname}, {where})")
                except (KeyError, TypeError_):
                    pass
                walk(c, defname, where + "/cont", False)
            case _:
                pass

    for d in env.defs:
        if d.modality == SHARED:
            if not isinstance(d.body, UpSL):
                if isinstance(d.body, Ref):
                    try:
                        if modality(env, d.body) != SHARED:
                            diags.append(
                                f"stratification: shared definition {d.name} "
                                f"does not unfold to an up-shift")
                    except (KeyError, TypeError_):
                        pass
                else:
                    diags.append(
                        f"stratification: shared definition {d.name} must be "
                        f"an up-shift")
            if isinstance(d.body, UpSL):
                walk(d.body.cont, d.name, "body", False)
        else:
            walk(d.body, d.name, "body", False)

    # declared modality must agree with the structural one
    for d in env.defs:
        try:
            if modality(env, Ref(d.name)) != d.modality:
                diags.append(
                    f"modality mismatch: {d.name} declared {d.modality}")
        except (KeyError, TypeError_):
            pass
    return diags


# --------------------------------------------------------------------------- #
# Constraint ordering helpers
# --------------------------------------------------------------------------- #

def constraint_leq(env: TypeDefEnv, c: ConstraintType, d: ConstraintType,
                   subtype) -> bool:
    """Lattice order: Bot <= Shared(A) <= Top; Shared entries compare by
    subtyping. `subtype` is injected to avoid an import cycle."""
    match (c, d):
        case (Bot(), _):
            return True
        case (_, Top()):
            return True
        case (SharedC(a), SharedC(b)):
            return subtype(env, a, b)
        case _:
            return False
