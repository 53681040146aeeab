import pathlib

import pytest

from sill.parser import parse_program, parse_type, ParseError
from sill.printer import format_type, format_program
from sill.types import (
    One, Tensor, Lolli, IChoice, EChoice, UpSL, DownSL, UpLL, DownLL,
    ValIn, ValOut, Ref, SHARED, LINEAR,
)

from conftest import CORPUS_FILES


def test_parse_type_precedence():
    # lolli binds loosest, then tensor, then the prefixes
    t = parse_type("1 * 1 -o 1")
    assert t == Lolli(Tensor(One(), One()), One())
    t = parse_type("!int. 1 * 1")
    assert t == Tensor(ValOut("int", One()), One())
    t = parse_type("up_s &{a: down_s queue}")
    assert t == UpSL(EChoice((("a", DownSL(Ref("queue"))),)))


def test_parse_type_right_assoc_lolli():
    assert parse_type("1 -o 1 -o 1") == Lolli(One(), Lolli(One(), One()))


def test_parse_type_parens():
    assert parse_type("(1 -o 1) * 1") == Tensor(Lolli(One(), One()), One())


def test_parse_type_choices_and_values():
    t = parse_type("+{a: ?int. 1, b: !id. 1}")
    assert t == IChoice((("a", ValIn("int", One())),
                         ("b", ValOut("id", One()))))


def test_parse_type_linear_shifts():
    assert parse_type("up_l down_l 1") == UpLL(DownLL(One()))


def test_modality_assignment():
    prog = parse_program("type s = up_s 1\ntype l = ?int. 1\n")
    assert prog.types.lookup("s").modality == SHARED
    assert prog.types.lookup("l").modality == LINEAR


def test_parse_errors_carry_line():
    with pytest.raises(ParseError) as e:
        parse_program("type t = \n+{}")
    assert "line" in str(e.value)
    with pytest.raises(ParseError):
        parse_type("1 *")
    with pytest.raises(ParseError):
        parse_type("&{a 1}")


def test_parse_proc_and_system():
    src = (
        "type cell = !int. 1\n"
        "proc P : () |- c: cell = put c 1; close c\n"
        "system { main P(); }\n"
    )
    prog = parse_program(src)
    assert "P" in prog.procs
    assert prog.system.main == ("P", ())


def test_corpus_parses():
    for p in CORPUS_FILES:
        parse_program(p.read_text())


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: p.stem)
def test_format_parse_fixed_point(path):
    prog = parse_program(path.read_text())
    once = format_program(prog)
    again = format_program(parse_program(once))
    assert once == again


def test_format_type_round_trip():
    for src in ("1", "1 * 1 -o 1", "+{a: 1, b: ?int. 1}",
                "up_s &{a: down_s q}", "up_l ?id. down_l 1",
                "(1 -o 1) * 1"):
        t = parse_type(src)
        assert parse_type(format_type(t)) == t
