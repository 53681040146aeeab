"""Executable semantics: a configuration is a multiset of predicates
rewritten one synchronization at a time.

The linear part (processes offering linear channels, and aliases from a
linear name to a shared one) is kept as an ordered list in which every
entry only uses channels offered further to the right; the shared part
(available shared sessions and unavailability markers) is unordered.

Alongside the rewriting the runtime maintains a typing record for every
process (its current offer type and the view type of every linear channel
it uses) plus a global constraint context for shared names. The monitor
rechecks the touched records after each step; any failure is reported as a
violation instead of silently continuing, which is what makes broken
release points observable at runtime.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum

from .types import (
    One, Tensor, Lolli, IChoice, EChoice, UpSL, DownSL, UpLL, DownLL,
    ValIn, ValOut, SessionType, TypeDefEnv,
    ConstraintType, SharedC, BOT, TOP, unfold,
)
from .subtype import is_subtype
from .synchro import is_ssync, meet, SsyncPreconditionError
from .procast import (
    FwdLL, FwdSS, FwdLS, Spawn, Close, Wait,
    SendChan, SendChanS, RecvChan, SendLabel, CaseRecv,
    Acquire, AcquireL, Accept, AcceptL, Release, ReleaseL, Detach, DetachL,
    SendVal, RecvVal, ProcessTerm, ProcDef, ProcSignature,
    substitute, freshen,
)
from .parser import Program
from .printer import format_proc
from .typecheck import _Ck


class ProgressError(Exception):
    """A configuration that neither steps nor matches the terminal shapes."""


class RunStatus(str, Enum):
    ALL_POISED = "all_poised"
    STUCK_ACQUIRE = "stuck_acquire"
    MAX_STEPS = "max_steps"
    MONITOR_VIOLATION = "monitor_violation"


@dataclass
class Proc:
    chan: str
    term: ProcessTerm
    offer: SessionType
    uses: dict[str, SessionType]
    shared: bool


@dataclass
class Connect:
    chan: str
    target: str


@dataclass
class Config:
    env: TypeDefEnv
    sig: ProcSignature
    theta: list  # Proc (linear) | Connect, ordered
    lam: dict[str, Proc]  # available shared sessions
    unavail: set[str]
    gamma: dict[str, ConstraintType]
    counter: int = 0

    def fresh(self) -> str:
        name = f"%g{self.counter}"
        self.counter += 1
        return name

    def provider(self, chan: str) -> Proc | Connect | None:
        for e in self.theta:
            if e.chan == chan:
                return e
        return self.lam.get(chan)

    def user_of(self, chan: str) -> Proc | None:
        for e in self.theta:
            if isinstance(e, Proc) and chan in e.uses:
                return e
        return None

    def unf(self, t: SessionType) -> SessionType:
        return unfold(self.env, t)


@dataclass(frozen=True)
class Step:
    rule: str
    provider: str
    user: str | None = None


@dataclass
class StepRecord:
    rule: str
    consumed: list
    produced: list
    fresh: list[str]
    renames: dict[str, str]
    touched: set[str]


# --------------------------------------------------------------------------- #
# Construction
# --------------------------------------------------------------------------- #

def _oneline(t: ProcessTerm) -> str:
    return " ".join(format_proc(t).split())


def _instantiate_body(cfg: Config, d: ProcDef, chan: str,
                      actuals: dict[str, str]) -> ProcessTerm:
    body = freshen(d.body, cfg.fresh)
    ren = dict(actuals)
    ren[d.offer] = chan
    return substitute(body, ren)


def _spawn_linear(cfg: Config, spawner: Proc, d: ProcDef, chan: str,
                  args: tuple[str, ...], kinds: tuple[str, ...],
                  rec: StepRecord) -> Proc:
    """Shared machinery of the spawn rules for a linear target: builds the
    new process record, routes each argument by its kind, and installs the
    alias/unavailability predicates for shared-as-linear arguments."""
    uses: dict[str, SessionType] = {}
    actuals: dict[str, str] = {}
    for arg, prm, kind in zip(args, d.params, kinds):
        if kind == "lin":
            spawner.uses.pop(arg, None)
            uses[arg] = prm.ty
            actuals[prm.chan] = arg
        elif kind == "sl":
            alias = cfg.fresh()
            rec.fresh.append(alias)
            cfg.theta.append(Connect(alias, arg))
            cfg.unavail.add(alias)
            cfg.gamma[alias] = BOT
            rec.produced.append({"kind": "connect", "chan": alias, "target": arg})
            rec.produced.append({"kind": "unavail", "chan": alias})
            uses[alias] = prm.ty
            actuals[prm.chan] = alias
        else:
            actuals[prm.chan] = arg
    body = _instantiate_body(cfg, d, chan, actuals)
    p = Proc(chan, body, d.offer_ty, uses, shared=False)
    cfg.theta.append(p)
    cfg.unavail.add(chan)
    cfg.gamma[chan] = BOT
    rec.produced.append({"kind": "procL", "chan": chan, "term": _oneline(body)})
    rec.produced.append({"kind": "unavail", "chan": chan})
    return p


def _spawn_shared(cfg: Config, d: ProcDef, chan: str,
                  args: tuple[str, ...], rec: StepRecord) -> Proc:
    actuals = {prm.chan: arg for prm, arg in zip(d.params, args)}
    body = _instantiate_body(cfg, d, chan, actuals)
    p = Proc(chan, body, d.offer_ty, {}, shared=True)
    cfg.lam[chan] = p
    cfg.gamma[chan] = SharedC(d.offer_ty)
    rec.produced.append({"kind": "procS", "chan": chan, "term": _oneline(body)})
    return p


def _arg_kinds(cfg: Config, d: ProcDef) -> tuple[str, ...]:
    # manifest arguments are always shared channels
    return tuple("sh" if prm.shared else "sl" for prm in d.params)


def initial_config(prog: Program) -> Config:
    """Build the starting configuration from the system block of an
    elaborated program."""
    if prog.system is None:
        raise ValueError("program has no system block")
    cfg = Config(prog.types, prog.procs, [], {}, set(), {})
    rec = StepRecord("init", [], [], [], {}, set())
    for binder, pname, args in prog.system.spawns:
        d = prog.procs.lookup(pname)
        _spawn_shared(cfg, d, binder, args, rec)
    mname, margs = prog.system.main
    d = prog.procs.lookup(mname)
    root = cfg.fresh()
    main = Proc(root, None, d.offer_ty, {}, shared=False)  # placeholder
    cfg.theta.append(main)
    cfg.unavail.add(root)
    cfg.gamma[root] = BOT
    kinds = _arg_kinds(cfg, d)
    # route the main arguments exactly as a spawn would
    uses: dict[str, SessionType] = {}
    actuals: dict[str, str] = {}
    for arg, prm, kind in zip(margs, d.params, kinds):
        if kind == "sl":
            alias = cfg.fresh()
            cfg.theta.append(Connect(alias, arg))
            cfg.unavail.add(alias)
            cfg.gamma[alias] = BOT
            uses[alias] = prm.ty
            actuals[prm.chan] = alias
        else:
            actuals[prm.chan] = arg
    main.term = _instantiate_body(cfg, d, root, actuals)
    main.uses = uses
    _retopo(cfg)
    return cfg


# --------------------------------------------------------------------------- #
# Ordering of the linear part
# --------------------------------------------------------------------------- #

def _entry_uses(e, offered: set[str]) -> set[str]:
    if isinstance(e, Connect):
        return {e.target} & offered
    return set(e.uses) & offered


def _retopo(cfg: Config) -> None:
    """Stable re-sort of the linear part so each entry uses only channels
    offered to its right."""
    remaining = list(cfg.theta)
    offered = {e.chan for e in remaining}
    out = []
    while remaining:
        used_by_rest: set[str] = set()
        for e in remaining:
            used_by_rest |= _entry_uses(e, offered)
        for i, e in enumerate(remaining):
            if e.chan not in used_by_rest or e.chan in _entry_uses(e, offered):
                out.append(e)
                remaining.pop(i)
                offered.discard(e.chan)
                break
        else:
            # defensive: a usage cycle cannot arise from well-typed steps
            out.extend(remaining)
            remaining = []
    cfg.theta = out


# --------------------------------------------------------------------------- #
# Step enumeration
# --------------------------------------------------------------------------- #

def _subject(p: Proc):
    """(channel, action) pair of the next action, or None for spawns and
    forwards which act on their own."""
    t = p.term
    match t:
        case Close(c) | Wait(c, _):
            return c, t
        case SendChan(c, _, _) | SendChanS(c, _, _) | RecvChan(c, _, _) \
                | SendLabel(c, _, _) | CaseRecv(c, _) \
                | SendVal(c, _, _) | RecvVal(c, _, _):
            return c, t
        case Acquire(_, c, _) | AcquireL(_, c, _) | Accept(_, c, _) \
                | AcceptL(_, c, _) | Release(_, c, _) | ReleaseL(_, c, _) \
                | Detach(_, c, _) | DetachL(_, c, _):
            return c, t
    return None, t


def _user_action(cfg: Config, chan: str):
    u = cfg.user_of(chan)
    if u is None:
        return None, None
    c, t = _subject(u)
    if c != chan:
        return u, None
    return u, t


def enumerate_steps(cfg: Config) -> list[Step]:
    steps: list[Step] = []
    for e in cfg.theta:
        if isinstance(e, Connect):
            continue
        t = e.term
        a = e.chan
        match t:
            case FwdLL(_, _):
                steps.append(Step("fwd_ll", a))
                continue
            case FwdLS(_, _):
                steps.append(Step("fwd_ls", a))
                continue
            case Spawn(pname, _, _, _, _):
                d = cfg.sig.lookup(pname)
                rule = "spawn_ls" if d.offer_shared else "spawn_ll"
                steps.append(Step(rule, a))
                continue
        c, _ = _subject(e)
        if c != a:
            continue  # user-side action; the matching provider drives it
        u, ut = _user_action(cfg, a)
        if ut is None:
            continue
        match (t, ut):
            case (Close(_), Wait(_, _)):
                steps.append(Step("one", a, u.chan))
            case (SendChan(_, _, _), RecvChan(_, _, _)):
                steps.append(Step("tensor", a, u.chan))
            case (SendChanS(_, _, _), RecvChan(_, _, _)):
                steps.append(Step("tensor_s", a, u.chan))
            case (RecvChan(_, _, _), SendChan(_, _, _)):
                steps.append(Step("lolli", a, u.chan))
            case (RecvChan(_, _, _), SendChanS(_, _, _)):
                steps.append(Step("lolli_s", a, u.chan))
            case (SendLabel(_, lbl, _), CaseRecv(_, bs)) \
                    if lbl in dict(bs):
                steps.append(Step("plus", a, u.chan))
            case (CaseRecv(_, bs), SendLabel(_, lbl, _)) \
                    if lbl in dict(bs):
                steps.append(Step("with", a, u.chan))
            case (SendVal(_, _, _), RecvVal(_, _, _)):
                steps.append(Step("val_out", a, u.chan))
            case (RecvVal(_, _, _), SendVal(_, _, _)):
                steps.append(Step("val_in", a, u.chan))
            case (AcceptL(_, _, _), AcquireL(_, _, _)):
                steps.append(Step("up_ll", a, u.chan))
            case (DetachL(_, _, _), ReleaseL(_, _, _)):
                steps.append(Step("down_ll", a, u.chan))
            case (Detach(_, _, _), Release(_, _, _)):
                steps.append(Step("down_sl", a, u.chan))
            case (Detach(_, _, _), ReleaseL(_, _, _)):
                steps.append(Step("down_sl2", a, u.chan))
    for a in sorted(cfg.lam):
        p = cfg.lam[a]
        match p.term:
            case FwdSS(_, _):
                steps.append(Step("fwd_ss", a))
                continue
            case Spawn(_, _, _, _, _):
                steps.append(Step("spawn_ss", a))
                continue
            case Accept(_, c, _) if c == a:
                # every pending acquirer of this session is a separate step
                for e in cfg.theta:
                    if isinstance(e, Connect):
                        continue
                    match e.term:
                        case Acquire(_, b, _) if b == a:
                            steps.append(Step("up_sl", a, e.chan))
                        case AcquireL(_, b, _):
                            tgt = cfg.provider(b)
                            if isinstance(tgt, Connect) and tgt.target == a:
                                steps.append(Step("up_sl2", a, e.chan))
    return steps


# --------------------------------------------------------------------------- #
# Applying a step
# --------------------------------------------------------------------------- #

def _pl(p: Proc) -> dict:
    kind = "procS" if p.shared else "procL"
    return {"kind": kind, "chan": p.chan, "term": _oneline(p.term)}


def _rename_all(cfg: Config, old: str, new: str) -> None:
    ren = {old: new}
    for e in cfg.theta:
        if isinstance(e, Connect):
            if e.chan == old:
                e.chan = new
            if e.target == old:
                e.target = new
        else:
            if e.chan == old:
                e.chan = new
            e.term = substitute(e.term, ren)
            if old in e.uses:
                e.uses[new] = e.uses.pop(old)
    for a in list(cfg.lam):
        p = cfg.lam[a]
        p.term = substitute(p.term, ren)
        if a == old:
            p.chan = new
            cfg.lam[new] = cfg.lam.pop(old)
    if old in cfg.unavail:
        cfg.unavail.discard(old)
        cfg.unavail.add(new)
    if old in cfg.gamma:
        c_old = cfg.gamma.pop(old)
        if new in cfg.gamma:
            m, env2 = meet(cfg.env, cfg.gamma[new], c_old)
            cfg.gamma[new] = m
            cfg.env = env2
        else:
            cfg.gamma[new] = c_old


def _remove_theta(cfg: Config, entry) -> None:
    cfg.theta.remove(entry)


def apply_step(cfg: Config, step: Step) -> StepRecord:
    rec = StepRecord(step.rule, [], [], [], {}, set())
    prov = cfg.provider(step.provider)
    user = None
    if step.user is not None:
        user = cfg.provider(step.user)
    rule = step.rule

    def advance_user_view(u: Proc, chan: str, f) -> None:
        u.uses[chan] = f(cfg.unf(u.uses[chan]))

    if rule == "fwd_ll":
        p = prov
        rec.consumed.append(_pl(p))
        a, b = p.term.offer, p.term.used
        _remove_theta(cfg, p)
        tgt = cfg.provider(b)
        if tgt is not None and not isinstance(tgt, Connect):
            rec.consumed.append(_pl(tgt))
        _rename_all(cfg, b, a)
        rec.renames[b] = a
        tgt2 = cfg.provider(a)
        if tgt2 is not None and not isinstance(tgt2, Connect):
            rec.produced.append(_pl(tgt2))
        elif isinstance(tgt2, Connect):
            rec.produced.append({"kind": "connect", "chan": tgt2.chan,
                                 "target": tgt2.target})
        rec.touched |= {a, b}

    elif rule == "fwd_ss":
        p = prov
        rec.consumed.append(_pl(p))
        a, b = p.term.offer, p.term.used
        del cfg.lam[a]
        _rename_all(cfg, b, a)
        rec.renames[b] = a
        tgt = cfg.provider(a)
        if tgt is not None and not isinstance(tgt, Connect):
            rec.produced.append(_pl(tgt))
        rec.touched |= {a, b}

    elif rule == "fwd_ls":
        p = prov
        rec.consumed.append(_pl(p))
        a, b = p.term.offer, p.term.used
        _remove_theta(cfg, p)
        cfg.theta.append(Connect(a, b))
        rec.produced.append({"kind": "connect", "chan": a, "target": b})
        rec.touched |= {a, b}

    elif rule in ("spawn_ll", "spawn_ls", "spawn_ss"):
        s = prov
        rec.consumed.append(_pl(s))
        sp: Spawn = s.term
        d = cfg.sig.lookup(sp.proc)
        c = cfg.fresh()
        rec.fresh.append(c)
        if d.offer_shared:
            _spawn_shared(cfg, d, c, sp.args, rec)
        else:
            _spawn_linear(cfg, s, d, c, sp.args, sp.kinds, rec)
            s.uses[c] = d.offer_ty
        s.term = substitute(sp.cont, {sp.binder: c})
        rec.produced.append(_pl(s))
        rec.touched |= {s.chan, c} | set(sp.args)

    elif rule == "one":
        p, u = prov, user
        rec.consumed += [_pl(p), _pl(u)]
        _remove_theta(cfg, p)
        u.term = u.term.cont
        u.uses.pop(p.chan, None)
        rec.produced.append(_pl(u))
        rec.touched |= {p.chan, u.chan}

    elif rule in ("tensor", "tensor_s"):
        p, u = prov, user
        rec.consumed += [_pl(p), _pl(u)]
        a = p.chan
        y = p.term.payload
        p.term = p.term.cont
        p.offer = cfg.unf(p.offer).cont
        uv = cfg.unf(u.uses[a])
        binder = user.term.binder
        if rule == "tensor":
            p.uses.pop(y, None)
            u.term = substitute(u.term.cont, {binder: y})
            u.uses[y] = uv.payload
        else:
            alias = cfg.fresh()
            rec.fresh.append(alias)
            cfg.theta.append(Connect(alias, y))
            cfg.unavail.add(alias)
            cfg.gamma[alias] = BOT
            rec.produced.append({"kind": "connect", "chan": alias, "target": y})
            rec.produced.append({"kind": "unavail", "chan": alias})
            u.term = substitute(u.term.cont, {binder: alias})
            u.uses[alias] = uv.payload
        u.uses[a] = uv.cont
        rec.produced += [_pl(p), _pl(u)]
        rec.touched |= {a, u.chan, y}

    elif rule in ("lolli", "lolli_s"):
        p, u = prov, user
        rec.consumed += [_pl(p), _pl(u)]
        a = p.chan
        y = u.term.payload
        ua = cfg.unf(p.offer)
        binder = p.term.binder
        if rule == "lolli":
            u.uses.pop(y, None)
            p.term = substitute(p.term.cont, {binder: y})
            p.uses[y] = ua.payload
        else:
            alias = cfg.fresh()
            rec.fresh.append(alias)
            cfg.theta.append(Connect(alias, y))
            cfg.unavail.add(alias)
            cfg.gamma[alias] = BOT
            rec.produced.append({"kind": "connect", "chan": alias, "target": y})
            rec.produced.append({"kind": "unavail", "chan": alias})
            p.term = substitute(p.term.cont, {binder: alias})
            p.uses[alias] = ua.payload
        p.offer = ua.cont
        u.term = u.term.cont
        advance_user_view(u, a, lambda v: v.cont)
        rec.produced += [_pl(p), _pl(u)]
        rec.touched |= {a, u.chan, y}

    elif rule == "plus":
        p, u = prov, user
        rec.consumed += [_pl(p), _pl(u)]
        lbl = p.term.label
        p.offer = cfg.unf(p.offer).branch(lbl)
        p.term = p.term.cont
        u.term = u.term.branch(lbl)
        advance_user_view(u, p.chan, lambda v: v.branch(lbl))
        rec.produced += [_pl(p), _pl(u)]
        rec.touched |= {p.chan, u.chan}

    elif rule == "with":
        p, u = prov, user
        rec.consumed += [_pl(p), _pl(u)]
        lbl = u.term.label
        p.offer = cfg.unf(p.offer).branch(lbl)
        p.term = p.term.branch(lbl)
        u.term = u.term.cont
        advance_user_view(u, p.chan, lambda v: v.branch(lbl))
        rec.produced += [_pl(p), _pl(u)]
        rec.touched |= {p.chan, u.chan}

    elif rule == "val_out":
        p, u = prov, user
        rec.consumed += [_pl(p), _pl(u)]
        v = p.term.value
        p.offer = cfg.unf(p.offer).cont
        p.term = p.term.cont
        u.term = substitute(u.term.cont, {u.term.binder: v})
        advance_user_view(u, p.chan, lambda t: t.cont)
        rec.produced += [_pl(p), _pl(u)]
        rec.touched |= {p.chan, u.chan}

    elif rule == "val_in":
        p, u = prov, user
        rec.consumed += [_pl(p), _pl(u)]
        v = u.term.value
        p.offer = cfg.unf(p.offer).cont
        p.term = substitute(p.term.cont, {p.term.binder: v})
        u.term = u.term.cont
        advance_user_view(u, p.chan, lambda t: t.cont)
        rec.produced += [_pl(p), _pl(u)]
        rec.touched |= {p.chan, u.chan}

    elif rule == "up_ll":
        p, u = prov, user
        rec.consumed += [_pl(p), _pl(u)]
        a = p.chan
        p.offer = cfg.unf(p.offer).cont
        p.term = substitute(p.term.cont, {p.term.binder: a})
        u.term = substitute(u.term.cont, {u.term.binder: a})
        advance_user_view(u, a, lambda v: v.cont)
        rec.produced += [_pl(p), _pl(u)]
        rec.touched |= {a, u.chan}

    elif rule == "down_ll":
        p, u = prov, user
        rec.consumed += [_pl(p), _pl(u)]
        a = p.chan
        p.offer = cfg.unf(p.offer).cont
        p.term = substitute(p.term.cont, {p.term.binder: a})
        u.term = substitute(u.term.cont, {u.term.binder: a})
        advance_user_view(u, a, lambda v: v.cont)
        rec.produced += [_pl(p), _pl(u)]
        rec.touched |= {a, u.chan}

    elif rule == "up_sl":
        p, u = prov, user
        rec.consumed += [_pl(p), _pl(u)]
        b = p.chan
        del cfg.lam[b]
        body = cfg.unf(p.offer).cont
        newp = Proc(b, substitute(p.term.cont, {p.term.binder: b}),
                    body, {}, shared=False)
        cfg.theta.append(newp)
        cfg.unavail.add(b)
        u.term = substitute(u.term.cont, {u.term.binder: b})
        u.uses[b] = body
        rec.produced += [_pl(newp), {"kind": "unavail", "chan": b}, _pl(u)]
        rec.touched |= {b, u.chan}

    elif rule == "up_sl2":
        p, u = prov, user
        rec.consumed += [_pl(p), _pl(u)]
        c = p.chan
        bchan = u.term.chan
        alias = cfg.provider(bchan)
        rec.consumed.append({"kind": "connect", "chan": bchan,
                             "target": alias.target})
        _remove_theta(cfg, alias)
        u.uses.pop(bchan, None)
        del cfg.lam[c]
        body = cfg.unf(p.offer).cont
        newp = Proc(c, substitute(p.term.cont, {p.term.binder: c}),
                    body, {}, shared=False)
        cfg.theta.append(newp)
        cfg.unavail.add(c)
        u.term = substitute(u.term.cont, {u.term.binder: c})
        u.uses[c] = body
        rec.produced += [_pl(newp), {"kind": "unavail", "chan": c}, _pl(u)]
        rec.touched |= {c, bchan, u.chan}

    elif rule == "down_sl":
        p, u = prov, user
        rec.consumed += [_pl(p), _pl(u), {"kind": "unavail", "chan": p.chan}]
        b = p.chan
        _remove_theta(cfg, p)
        cfg.unavail.discard(b)
        shared_ty = cfg.unf(p.offer).cont
        newp = Proc(b, substitute(p.term.cont, {p.term.binder: b}),
                    shared_ty, {}, shared=True)
        cfg.lam[b] = newp
        cfg.gamma[b] = SharedC(shared_ty)
        u.term = substitute(u.term.cont, {u.term.binder: b})
        u.uses.pop(b, None)
        rec.produced += [_pl(newp), _pl(u)]
        rec.touched |= {b, u.chan}

    elif rule == "down_sl2":
        p, u = prov, user
        rec.consumed += [_pl(p), _pl(u), {"kind": "unavail", "chan": p.chan}]
        c = p.chan
        _remove_theta(cfg, p)
        cfg.unavail.discard(c)
        shared_ty = cfg.unf(p.offer).cont
        newp = Proc(c, substitute(p.term.cont, {p.term.binder: c}),
                    shared_ty, {}, shared=True)
        cfg.lam[c] = newp
        cfg.gamma[c] = SharedC(shared_ty)
        b = cfg.fresh()
        rec.fresh.append(b)
        cfg.theta.append(Connect(b, c))
        cfg.unavail.add(b)
        cfg.gamma[b] = BOT
        u.term = substitute(u.term.cont, {u.term.binder: b})
        u.uses.pop(c, None)
        u.uses[b] = UpLL(cfg.unf(shared_ty).cont)
        rec.produced += [
            _pl(newp),
            {"kind": "connect", "chan": b, "target": c},
            {"kind": "unavail", "chan": b},
            _pl(u),
        ]
        rec.touched |= {c, b, u.chan}

    else:
        raise AssertionError(f"unknown rule {rule}")

    _retopo(cfg)
    rec.touched |= set(rec.renames) | set(rec.renames.values())
    return rec


# --------------------------------------------------------------------------- #
# Monitor
# --------------------------------------------------------------------------- #

def monitor_check(cfg: Config, touched: set[str] | None = None) -> str | None:
    """Recheck the typing records of the touched channels (all of them when
    touched is None). Returns a violation message or None."""
    # well-formedness of the predicate multiset
    chans = [e.chan for e in cfg.theta] + list(cfg.lam)
    if len(chans) != len(set(chans)):
        dup = sorted({c for c in chans if chans.count(c) > 1})
        return f"well-formedness: multiple providers for {dup}"
    for a in cfg.lam:
        if a in cfg.unavail:
            return f"well-formedness: {a} both available and unavailable"
    for e in cfg.theta:
        if e.chan not in cfg.unavail:
            return f"well-formedness: linear {e.chan} lacks an " \
                   f"unavailability marker"
    for a in cfg.unavail:
        if a not in cfg.gamma:
            return f"shared context: no constraint recorded for {a}"

    ck = _Ck(cfg.env, cfg.sig)
    env = cfg.env

    def relevant(e) -> bool:
        if touched is None:
            return True
        if isinstance(e, Connect):
            return e.chan in touched or e.target in touched
        return e.chan in touched or bool(set(e.uses) & touched)

    for e in cfg.theta:
        if not relevant(e):
            continue
        if isinstance(e, Connect):
            u = cfg.user_of(e.chan)
            if u is None:
                continue
            con = cfg.gamma.get(e.target)
            view = u.uses[e.chan]
            if not (isinstance(con, SharedC)
                    and is_subtype(env, con.ty, view)):
                return (f"alias {e.chan} -> {e.target}: shared constraint "
                        f"does not refine the client view")
            continue
        if e.chan not in cfg.gamma:
            return f"no constraint recorded for linear {e.chan}"
        u = cfg.user_of(e.chan)
        view = u.uses[e.chan] if u is not None else e.offer
        try:
            ok = is_subtype(env, e.offer, view) and \
                is_ssync(env, e.offer, view, cfg.gamma[e.chan])
        except SsyncPreconditionError:
            ok = False
        if not ok:
            return (f"linear {e.chan}: offer type no longer synchronizes "
                    f"with the client view under its release obligation")
        ck.diags.clear()
        if ck.linear(dict(cfg.gamma), dict(e.uses), {},
                     e.term, e.chan, e.offer) is None:
            return f"process at {e.chan} no longer typechecks: " \
                   + "; ".join(ck.diags)

    for a in sorted(cfg.lam):
        p = cfg.lam[a]
        if touched is not None and a not in touched:
            continue
        con = cfg.gamma.get(a)
        if not isinstance(con, SharedC):
            return f"shared {a}: no shared constraint recorded"
        try:
            ok = is_subtype(env, p.offer, con.ty) and \
                is_ssync(env, p.offer, con.ty, TOP)
        except SsyncPreconditionError:
            ok = False
        if not ok:
            return (f"shared {a}: offer type does not equi-synchronize "
                    f"with its recorded constraint")
        ck.diags.clear()
        if ck.shared(dict(cfg.gamma), {}, p.term, a, p.offer) is None:
            return f"process at {a} no longer typechecks: " \
                   + "; ".join(ck.diags)
    return None


def typecheck_config(cfg: Config) -> str | None:
    return monitor_check(cfg, None)


# --------------------------------------------------------------------------- #
# Progress classification
# --------------------------------------------------------------------------- #

def _poised(cfg: Config, p: Proc) -> bool:
    c, t = _subject(p)
    if p.shared:
        return isinstance(t, Accept) and c == p.chan
    if c != p.chan:
        return False
    return isinstance(t, (Close, SendChan, SendChanS, RecvChan, SendLabel,
                          CaseRecv, SendVal, RecvVal, AcceptL, Detach,
                          DetachL))


def _acquire_blocked(cfg: Config, p: Proc) -> bool:
    match p.term:
        case Acquire(_, b, _):
            return b not in cfg.lam
        case AcquireL(_, b, _):
            tgt = cfg.provider(b)
            if isinstance(tgt, Connect):
                return tgt.target not in cfg.lam
            return tgt is None
    return False


def classify(cfg: Config) -> RunStatus:
    procs = [e for e in cfg.theta if isinstance(e, Proc)] + \
        [cfg.lam[a] for a in sorted(cfg.lam)]
    if all(_poised(cfg, p) for p in procs):
        return RunStatus.ALL_POISED
    if any(_acquire_blocked(cfg, p) for p in procs):
        return RunStatus.STUCK_ACQUIRE
    raise ProgressError(
        "configuration cannot step yet is neither poised nor blocked on "
        "an acquire")


# --------------------------------------------------------------------------- #
# Driver
# --------------------------------------------------------------------------- #

@dataclass
class RunResult:
    status: RunStatus
    steps: int
    violation: str | None
    config: Config


def _check_gamma_monotone(cfg: Config, before: dict[str, ConstraintType],
                          renames: dict[str, str]) -> str | None:
    from .synchro import cleq
    for k, c in before.items():
        nk = renames.get(k, k)
        if nk not in cfg.gamma:
            return f"shared context: constraint for {k} disappeared"
        if not cleq(cfg.env, cfg.gamma[nk], c):
            return (f"shared context: constraint for {nk} evolved upward "
                    f"instead of tightening")
    return None


def run(prog: Program, *, seed: int = 0, max_steps: int = 1000,
        monitor: bool = True, policy: str = "random",
        trace=None) -> RunResult:
    """Execute the system block of an elaborated program.

    ``trace`` is an optional writable text stream receiving one JSON object
    per step. ``policy`` is "random" (uniform choice among the enabled
    steps, driven by ``seed``) or "fifo" (always the first enabled step in
    canonical order).
    """
    cfg = initial_config(prog)
    if monitor:
        v = monitor_check(cfg, None)
        if v is not None:
            return RunResult(RunStatus.MONITOR_VIOLATION, 0, v, cfg)
    rng = random.Random(seed)
    n = 0
    while n < max_steps:
        steps = enumerate_steps(cfg)
        if not steps:
            return RunResult(classify(cfg), n, None, cfg)
        idx = 0 if policy == "fifo" else rng.randrange(len(steps))
        before = dict(cfg.gamma) if monitor else None
        rec = apply_step(cfg, steps[idx])
        n += 1
        if trace is not None:
            trace.write(json.dumps({
                "step": n,
                "rule": rec.rule,
                "consumed": rec.consumed,
                "produced": rec.produced,
                "fresh": rec.fresh,
            }, sort_keys=True, separators=(",", ":")) + "\n")
        if monitor:
            v = _check_gamma_monotone(cfg, before, rec.renames)
            if v is None:
                v = monitor_check(cfg, rec.touched)
            if v is not None:
                return RunResult(RunStatus.MONITOR_VIOLATION, n, v, cfg)
    return RunResult(RunStatus.MAX_STEPS, n, None, cfg)
