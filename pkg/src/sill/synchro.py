"""The subsynchronizing judgment, its equi-synchronizing special case, and
the meet operator on constraints.

ssync(A, B, D) tracks, for a provider type A used by a client at type B,
the obligation D under which the session may be released. An up-shift into
the linear layer records the provider's shared type as the new obligation;
a down-shift back to the shared layer checks the release point against the
obligation and resets it. Choices only follow branches both sides can
take, which is what lets provably dead branches be ignored.
"""

from __future__ import annotations

from dataclasses import dataclass

from .types import (
    One, Tensor, Lolli, IChoice, EChoice, UpSL, DownSL, UpLL, DownLL,
    ValIn, ValOut, Ref, SessionType, TypeDefEnv, TypeDef,
    Bot, Top, SharedC, ConstraintType, BOT, TOP,
    unfold, modality, constraint_leq, SHARED, LINEAR,
)
from .subtype import is_subtype


class SsyncPreconditionError(Exception):
    """The judgment is only defined for pairs A <= B."""


def cleq(env: TypeDefEnv, c: ConstraintType, d: ConstraintType) -> bool:
    return constraint_leq(env, c, d, is_subtype)


def cleq_type(env: TypeDefEnv, c: ConstraintType, b: SessionType) -> bool:
    """Constraint against a concrete type, as used by release checks and
    by typing premises of the form `hat(B) <= A`."""
    match c:
        case Bot():
            return True
        case SharedC(a):
            return is_subtype(env, a, b)
        case Top():
            return False


_ssync_cache: dict[tuple, bool] = {}


def clear_cache() -> None:
    _ssync_cache.clear()


def _ssync(env: TypeDefEnv, a: SessionType, b: SessionType,
           d: ConstraintType, assumed: set[tuple]) -> bool:
    key = (env, a, b, d)
    hit = _ssync_cache.get(key)
    if hit is not None:
        return hit
    if (a, b, d) in assumed:
        return True
    assumed.add((a, b, d))
    ua, ub = unfold(env, a), unfold(env, b)
    match (ua, ub):
        case (One(), One()):
            ok = True
        case (Tensor(_, c1), Tensor(_, c2)):
            ok = _ssync(env, c1, c2, d, assumed)
        case (Lolli(_, c1), Lolli(_, c2)):
            ok = _ssync(env, c1, c2, d, assumed)
        case (IChoice(_), IChoice(_)) | (EChoice(_), EChoice(_)):
            common = sorted(set(ua.labels()) & set(ub.labels()))
            ok = all(
                _ssync(env, ua.branch(l), ub.branch(l), d, assumed)
                for l in common)
        case (UpLL(c1), UpLL(c2)):
            ok = _ssync(env, c1, c2, d, assumed)
        case (DownLL(c1), DownLL(c2)):
            ok = _ssync(env, c1, c2, d, assumed)
        case (UpSL(c1), (UpSL(c2) | UpLL(c2))):
            # only an unconstrained channel may be acquired; the provider's
            # shared type becomes the release obligation
            ok = d == TOP and _ssync(env, c1, c2, SharedC(a), assumed)
        case (DownSL(c1), (DownSL(c2) | DownLL(c2))):
            # the release point must satisfy the obligation, which then resets
            ok = (cleq(env, SharedC(c1), d)
                  and _ssync(env, c1, c2, TOP, assumed))
        case (ValIn(t1, c1), ValIn(t2, c2)) if t1 == t2:
            ok = _ssync(env, c1, c2, d, assumed)
        case (ValOut(t1, c1), ValOut(t2, c2)) if t1 == t2:
            ok = _ssync(env, c1, c2, d, assumed)
        case _:
            ok = False
    if not ok:
        _ssync_cache[key] = False
    return ok


def is_ssync(env: TypeDefEnv, a: SessionType, b: SessionType,
             d: ConstraintType = TOP) -> bool:
    if not is_subtype(env, a, b):
        raise SsyncPreconditionError(
            "subsynchronizing judgment posed for a pair that is not in the "
            "subtyping relation")
    key = (env, a, b, d)
    hit = _ssync_cache.get(key)
    if hit is not None:
        return hit
    ok = _ssync(env, a, b, d, set())
    _ssync_cache[key] = ok
    return ok


def is_esync(env: TypeDefEnv, a: SessionType) -> bool:
    """A type is equi-synchronizing exactly when the pair (A, A) is
    subsynchronizing under no obligation."""
    return is_ssync(env, a, a, TOP)


# --------------------------------------------------------------------------- #
# Meet
# --------------------------------------------------------------------------- #

class _NoMeet(Exception):
    """Internal signal: the structural meet (or join) does not exist."""


@dataclass
class _MeetState:
    env: TypeDefEnv
    fresh: list[TypeDef]
    memo: dict[tuple, str]
    counter: int = 0

    def lookup_names(self) -> set[str]:
        return set(self.env.names()) | {d.name for d in self.fresh}

    def mint(self, mode: str, a: SessionType, b: SessionType) -> str:
        base = "Meet" if mode == "meet" else "Join"
        while True:
            name = f"{base}{self.counter}"
            self.counter += 1
            if name not in self.lookup_names():
                return name

    def resolve(self, t: SessionType) -> SessionType:
        if isinstance(t, Ref):
            for d in self.fresh:
                if d.name == t.name:
                    return d.body
            return self.env.lookup(t.name).body
        return t

    def unfold(self, t: SessionType) -> SessionType:
        while isinstance(t, Ref):
            t = self.resolve(t)
        return t


def _mt(st: _MeetState, mode: str, a: SessionType, b: SessionType) -> SessionType:
    """Structural meet (or join, for contravariant positions) closing
    recursion by minting fresh named definitions."""
    if a == b:
        return a
    if isinstance(a, Ref) or isinstance(b, Ref):
        key = (mode, a, b)
        if key in st.memo:
            return Ref(st.memo[key])
        name = st.mint(mode, a, b)
        st.memo[key] = name
        placeholder = len(st.fresh)
        memo_snapshot = set(st.memo)
        st.fresh.append(TypeDef(name, LINEAR, One()))
        try:
            body = _mt_struct(st, mode, st.unfold(a), st.unfold(b))
        except _NoMeet:
            # roll back everything minted inside the failed subderivation:
            # a nested definition may reference this one and must not survive
            for k in set(st.memo) - memo_snapshot:
                del st.memo[k]
            del st.memo[key]
            del st.fresh[placeholder:]
            raise
        mod = SHARED if isinstance(body, UpSL) else LINEAR
        st.fresh[placeholder] = TypeDef(name, mod, body)
        return Ref(name)
    return _mt_struct(st, mode, st.unfold(a), st.unfold(b))


def _mt_struct(st: _MeetState, mode: str, a: SessionType,
               b: SessionType) -> SessionType:
    dual = "join" if mode == "meet" else "meet"
    match (a, b):
        case (One(), One()):
            return One()
        case (Tensor(p1, c1), Tensor(p2, c2)):
            return Tensor(_mt(st, mode, p1, p2), _mt(st, mode, c1, c2))
        case (Lolli(p1, c1), Lolli(p2, c2)):
            # payloads are contravariant, so the bound flips there
            return Lolli(_mt(st, dual, p1, p2), _mt(st, mode, c1, c2))
        case (EChoice(_), EChoice(_)):
            la, lb = a.labels(), b.labels()
            if mode == "meet":
                # union of labels; non-common branches carried over verbatim
                branches = []
                for l in la:
                    if l in lb:
                        branches.append((l, _mt(st, mode, a.branch(l), b.branch(l))))
                    else:
                        branches.append((l, a.branch(l)))
                for l in lb:
                    if l not in la:
                        branches.append((l, b.branch(l)))
                return EChoice(tuple(branches))
            common = [l for l in la if l in lb]
            branches = []
            for l in common:
                try:
                    branches.append((l, _mt(st, mode, a.branch(l), b.branch(l))))
                except _NoMeet:
                    pass
            if not branches:
                raise _NoMeet
            return EChoice(tuple(branches))
        case (IChoice(_), IChoice(_)):
            la, lb = a.labels(), b.labels()
            if mode == "meet":
                # intersection; a branch whose continuations admit no common
                # refinement is dropped, and an empty result collapses
                common = [l for l in la if l in lb]
                branches = []
                for l in common:
                    try:
                        branches.append((l, _mt(st, mode, a.branch(l), b.branch(l))))
                    except _NoMeet:
                        pass
                if not branches:
                    raise _NoMeet
                return IChoice(tuple(branches))
            branches = []
            for l in la:
                if l in lb:
                    branches.append((l, _mt(st, mode, a.branch(l), b.branch(l))))
                else:
                    branches.append((l, a.branch(l)))
            for l in lb:
                if l not in la:
                    branches.append((l, b.branch(l)))
            return IChoice(tuple(branches))
        case (UpSL(c1), UpSL(c2)):
            return UpSL(_mt(st, mode, c1, c2))
        case (UpSL(c1), UpLL(c2)) | (UpLL(c1), UpSL(c2)):
            # the shared shift is below the linear one
            inner = _mt(st, mode, c1, c2)
            return UpSL(inner) if mode == "meet" else UpLL(inner)
        case (UpLL(c1), UpLL(c2)):
            return UpLL(_mt(st, mode, c1, c2))
        case (DownSL(c1), DownSL(c2)):
            return DownSL(_mt(st, mode, c1, c2))
        case (DownSL(c1), DownLL(c2)) | (DownLL(c1), DownSL(c2)):
            inner = _mt(st, mode, c1, c2)
            return DownSL(inner) if mode == "meet" else DownLL(inner)
        case (DownLL(c1), DownLL(c2)):
            return DownLL(_mt(st, mode, c1, c2))
        case (ValIn(t1, c1), ValIn(t2, c2)) if t1 == t2:
            return ValIn(t1, _mt(st, mode, c1, c2))
        case (ValOut(t1, c1), ValOut(t2, c2)) if t1 == t2:
            return ValOut(t1, _mt(st, mode, c1, c2))
        case _:
            raise _NoMeet


def meet(env: TypeDefEnv, c: ConstraintType,
         d: ConstraintType) -> tuple[ConstraintType, TypeDefEnv]:
    """Greatest lower bound of two constraints. May extend the environment
    with fresh definitions that close recursion in the result."""
    match (c, d):
        case (Top(), x) | (x, Top()):
            return x, env
        case (Bot(), _) | (_, Bot()):
            return BOT, env
        case (SharedC(a), SharedC(b)):
            st = _MeetState(env, [], {})
            try:
                t = _mt(st, "meet", a, b)
            except _NoMeet:
                return BOT, env
            return SharedC(t), env.extend(*st.fresh)
    raise AssertionError("unreachable")


def meet_types(env: TypeDefEnv, a: SessionType,
               b: SessionType) -> tuple[SessionType | None, TypeDefEnv]:
    """Structural meet of two session types; None when no common
    refinement exists."""
    st = _MeetState(env, [], {})
    try:
        t = _mt(st, "meet", a, b)
    except _NoMeet:
        return None, env
    return t, env.extend(*st.fresh)
