import random

import pytest
from hypothesis import given, settings, strategies as st

from sill.types import (
    One, Tensor, Lolli, IChoice, EChoice, UpSL, DownSL, UpLL, DownLL,
    ValIn, ValOut, Ref, TypeDef, TypeDefEnv, SHARED, LINEAR,
    BOT, TOP, SharedC,
)
from sill.subtype import is_subtype
from sill.synchro import (
    SsyncPreconditionError, cleq, cleq_type, is_ssync, is_esync,
    meet, meet_types,
)

from gen import gen_env, gen_constraint


SQ = TypeDefEnv((
    TypeDef("queue", LINEAR, EChoice((
        ("enqueue", ValIn("int", DownSL(Ref("shared_queue")))),
    ))),
    TypeDef("shared_queue", SHARED, UpSL(Ref("queue"))),
))


def test_cleq_type():
    assert cleq_type(SQ, BOT, One())
    assert not cleq_type(SQ, TOP, One())
    assert cleq_type(SQ, SharedC(Ref("shared_queue")), Ref("shared_queue"))


def test_precondition_requires_subtype():
    with pytest.raises(SsyncPreconditionError):
        is_ssync(TypeDefEnv(), One(), Tensor(One(), One()))


def test_unit_ssync():
    assert is_ssync(TypeDefEnv(), One(), One(), TOP)
    # no release point is ever reached, so any obligation is fine
    assert is_ssync(TypeDefEnv(), One(), One(), BOT)


def test_acquire_needs_unconstrained_channel():
    sq = Ref("shared_queue")
    assert is_ssync(SQ, sq, sq, TOP)
    assert not is_ssync(SQ, sq, sq, BOT)
    assert not is_ssync(SQ, sq, sq, SharedC(sq))


def test_release_checks_obligation_then_resets():
    # release at shared_queue satisfies the obligation recorded at acquire
    assert is_esync(SQ, Ref("shared_queue"))
    # an obligation at an unrelated type refutes the release point
    env = SQ.extend(TypeDef("other", SHARED, UpSL(One())))
    a = DownSL(Ref("shared_queue"))
    assert not is_ssync(env, a, a, SharedC(Ref("other")))
    # a dead obligation can never be discharged at a release point
    assert not is_ssync(env, a, a, BOT)


def test_ignored_branch(corpus):
    env = corpus["ignore"].types
    assert is_ssync(env, Ref("ignore_provider"), Ref("ignore_client"))
    assert not is_esync(env, Ref("ignore_provider"))
    assert is_esync(env, Ref("ignore_client"))


def test_auction_esync(corpus):
    env = corpus["auction"].types
    assert is_esync(env, Ref("auction"))
    assert not is_esync(env, Ref("bidding_shared"))
    assert not is_esync(env, Ref("collecting_shared"))


def test_phased_views_ssync(corpus):
    env = corpus["auction"].types
    assert is_ssync(env, Ref("auction"), Ref("bidding_ll"))
    assert is_ssync(env, Ref("auction"), Ref("collecting_ll"))


def test_linear_shifts_pass_obligation_through():
    # the purely linear shifts neither check nor reset the obligation
    b = UpLL(DownLL(One()))
    assert is_ssync(SQ, b, b, BOT)
    assert is_ssync(SQ, b, b, TOP)
    assert is_ssync(SQ, b, b, SharedC(Ref("shared_queue")))


# --------------------------------------------------------------------------- #
# Meet
# --------------------------------------------------------------------------- #

def test_meet_lattice_units():
    sq = SharedC(Ref("shared_queue"))
    assert meet(SQ, TOP, sq)[0] == sq
    assert meet(SQ, sq, TOP)[0] == sq
    assert meet(SQ, BOT, sq)[0] == BOT
    assert meet(SQ, TOP, TOP)[0] == TOP


def test_meet_equal_shared():
    sq = SharedC(Ref("shared_queue"))
    m, env = meet(SQ, sq, sq)
    assert m == sq and env == SQ


def test_meet_echoice_union():
    a = EChoice((("a", One()),))
    b = EChoice((("b", One()),))
    m, _ = meet_types(TypeDefEnv(), a, b)
    assert isinstance(m, EChoice)
    assert set(m.labels()) == {"a", "b"}


def test_meet_ichoice_intersection():
    a = IChoice((("a", One()), ("b", One())))
    b = IChoice((("b", One()), ("c", One())))
    m, _ = meet_types(TypeDefEnv(), a, b)
    assert isinstance(m, IChoice)
    assert set(m.labels()) == {"b"}


def test_meet_ichoice_empty_is_bottom():
    a = IChoice((("a", One()),))
    b = IChoice((("b", One()),))
    m, _ = meet_types(TypeDefEnv(), a, b)
    assert m is None
    assert meet(TypeDefEnv(), SharedC(UpSL(a)), SharedC(UpSL(b)))[0] == BOT


def test_meet_lolli_payload_joins():
    small = IChoice((("a", One()),))
    big = IChoice((("a", One()), ("b", One())))
    m, env = meet_types(TypeDefEnv(), Lolli(small, One()), Lolli(big, One()))
    # the meet must be below both, so its payload is the join (the wider
    # internal choice here)
    assert is_subtype(env, m, Lolli(small, One()))
    assert is_subtype(env, m, Lolli(big, One()))


def test_meet_shift_dominance():
    m, _ = meet_types(TypeDefEnv(), UpSL(One()), UpLL(One()))
    assert m == UpSL(One())
    m, _ = meet_types(TypeDefEnv(), DownLL(UpSL(One())), DownSL(UpSL(One())))
    assert m == DownSL(UpSL(One()))


def test_meet_recursive_mints_definitions():
    env = TypeDefEnv((
        TypeDef("a", LINEAR, IChoice((("x", Ref("a")), ("y", One())))),
        TypeDef("b", LINEAR, IChoice((("x", Ref("b")), ("z", One())))),
    ))
    m, env2 = meet_types(env, Ref("a"), Ref("b"))
    assert m is not None
    assert is_subtype(env2, m, Ref("a"))
    assert is_subtype(env2, m, Ref("b"))


def test_meet_failure_rolls_back_minted_definitions():
    env = TypeDefEnv((
        TypeDef("a", LINEAR, Tensor(Ref("a"), One())),
        TypeDef("b", LINEAR, Tensor(Ref("b"), EChoice((("x", One()),)))),
    ))
    m, env2 = meet_types(env, Ref("a"), Ref("b"))
    assert m is None
    # nothing minted during the failed derivation leaks out
    assert env2 == env


def test_meet_is_glb_on_corpus_views(corpus):
    env = corpus["auction"].types
    c = SharedC(Ref("auction"))
    for other_name in ("auction", "bidding_shared"):
        d = SharedC(Ref(other_name))
        m, env2 = meet(env, c, d)
        assert cleq(env2, m, c) and cleq(env2, m, d)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_meet_lower_bound_property(seed):
    rng = random.Random(seed)
    env = gen_env(rng)
    c, d = gen_constraint(rng, env), gen_constraint(rng, env)
    m, env2 = meet(env, c, d)
    assert cleq(env2, m, c)
    assert cleq(env2, m, d)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_meet_greatest_property(seed):
    rng = random.Random(seed)
    env = gen_env(rng)
    c, d = gen_constraint(rng, env), gen_constraint(rng, env)
    m, env2 = meet(env, c, d)
    e = gen_constraint(rng, env)
    if cleq(env2, e, c) and cleq(env2, e, d):
        assert cleq(env2, e, m)
