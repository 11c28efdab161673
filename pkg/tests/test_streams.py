import numpy as np
import pytest

from f1sketch import Distribution, ExactState, Stream, StreamParseError, generate, read_stream, write_stream
from f1sketch.streams import parse_text


def replay(stream) -> ExactState:
    state = ExactState(stream.n)
    state.update_many(stream.items, stream.deltas)
    return state


# -- parsing ------------------------------------------------------------------


def test_parse_header_and_records():
    s = parse_text(["# n=10", "# a comment", "3 5", "", "10 -2"])
    assert s.n == 10
    assert list(s.items) == [3, 10]
    assert list(s.deltas) == [5, -2]


def test_parse_infers_domain_without_header():
    s = parse_text(["4 1", "9 2"])
    assert s.n == 9


def test_parse_errors_carry_line_numbers():
    with pytest.raises(StreamParseError) as e:
        parse_text(["# n=5", "1 2 3"])
    assert e.value.line == 2
    with pytest.raises(StreamParseError) as e:
        parse_text(["# n=5", "ok nope"])
    assert e.value.line == 2
    with pytest.raises(StreamParseError) as e:
        parse_text(["# n=5", "1 1", "6 1"])
    assert e.value.line == 3
    with pytest.raises(StreamParseError) as e:
        parse_text(["0 1"])
    assert e.value.line == 1
    with pytest.raises(StreamParseError):
        parse_text([])  # no records and no header: domain unknown
    with pytest.raises(StreamParseError):
        parse_text(["# n=zero"])


def test_header_only_stream_is_empty_and_valid():
    s = parse_text(["# n=7"])
    assert s.n == 7 and len(s) == 0


def test_parse_rejects_delta_beyond_counter_range():
    with pytest.raises(StreamParseError) as e:
        parse_text(["# n=2", f"1 {1 << 63}"])
    assert e.value.line == 2
    parse_text(["# n=2", f"1 {(1 << 63) - 1}"])  # boundary value still parses


def test_text_round_trip(tmp_path):
    path = str(tmp_path / "s.txt")
    orig = Stream(12, np.array([1, 5, 12]), np.array([3, -4, 10**12]))
    write_stream(path, orig)
    back = read_stream(path)
    assert back.n == 12
    assert (back.items == orig.items).all()
    assert (back.deltas == orig.deltas).all()


def test_binary_round_trip(tmp_path):
    path = str(tmp_path / "s.bin")
    orig = Stream(1000, np.array([1, 999, 7]), np.array([-(2**40), 5, 0]))
    write_stream(path, orig, binary=True)
    back = read_stream(path, binary=True)
    assert back.n == 1000
    assert (back.items == orig.items).all()
    assert (back.deltas == orig.deltas).all()


def test_binary_errors(tmp_path):
    path = str(tmp_path / "bad.bin")
    with open(path, "wb") as fh:
        fh.write(b"NOTMAGIC")
    with pytest.raises(StreamParseError):
        read_stream(path, binary=True)
    with open(path, "wb") as fh:
        fh.write(b"F1SKBIN\x00" + b"\x01\x00\x00\x00\x00\x00\x00\x00" + b"\xff")
    with pytest.raises(StreamParseError):
        read_stream(path, binary=True)


# -- generation ---------------------------------------------------------------


def test_uniform_insert_only():
    s = generate("uniform", n=10, m=10, seed=1)
    assert len(s) == 10
    assert (s.deltas == 1).all()
    assert s.items.min() >= 1 and s.items.max() <= 10


def test_uniform_turnstile_has_negatives():
    s = generate("uniform", n=10, m=400, seed=1, turnstile=True)
    assert (s.deltas == -1).sum() > 0 and (s.deltas == 1).sum() > 0


def test_planted_profile_exact():
    s = generate("planted(3,1000,5)", n=100, m=100, seed=3)
    f = replay(s).frequencies
    assert (np.abs(f) == 1000).sum() == 3
    assert set(np.abs(f[3:])) <= {1, 2, 3, 4, 5}
    assert len(s) == 100


def test_planted_padding_preserves_profile():
    base = generate("planted(3,1000,5)", n=100, m=100, seed=3)
    padded = generate("planted(3,1000,5)", n=100, m=150, seed=3)
    assert len(padded) == 150
    assert (replay(base).frequencies == replay(padded).frequencies).all()
    churned = generate("planted(3,1000,5)", n=100, m=151, seed=3, turnstile=True)
    assert len(churned) == 151
    assert (replay(base).frequencies == replay(churned).frequencies).all()
    assert (churned.deltas < 0).sum() > 0


def test_planted_requires_enough_records():
    with pytest.raises(ValueError):
        generate("planted(3,1000,5)", n=100, m=50, seed=3)


def test_zipf_head_dominates():
    s = generate("zipf(1.1)", n=1000, m=20000, seed=5)
    f = replay(s).frequencies
    assert f[0] > 10 * f[500:].mean()
    assert len(s) == 20000


def test_adversarial_profile():
    s = generate("adversarial", n=50, m=80, seed=2)
    f = replay(s).frequencies
    scale = max(1.0, 80 / (2 * np.sqrt(50)))
    want = np.maximum(1, np.round(scale / np.sqrt(np.arange(1, 51)))).astype(int)
    want[0] += max(0, 80 - want.sum())  # item 1 absorbs rounding
    assert (np.abs(f) == want).all()
    assert len(s) == 80
    turns = generate("adversarial", n=50, m=80, seed=2, turnstile=True)
    assert (replay(turns).frequencies < 0).sum() > 0


def test_generation_is_deterministic(tmp_path):
    a = str(tmp_path / "a.txt")
    b = str(tmp_path / "b.txt")
    write_stream(a, generate("zipf(1.3)", n=500, m=3000, seed=9))
    write_stream(b, generate("zipf(1.3)", n=500, m=3000, seed=9))
    assert open(a, "rb").read() == open(b, "rb").read()
    c = str(tmp_path / "c.txt")
    write_stream(c, generate("zipf(1.3)", n=500, m=3000, seed=10))
    assert open(a, "rb").read() != open(c, "rb").read()


def test_distribution_parsing():
    assert Distribution.parse("zipf") == Distribution("zipf", (1.1,))
    assert Distribution.parse("zipf(2)") == Distribution("zipf", (2.0,))
    assert Distribution.parse("planted(3, 10, 2)") == Distribution("planted", (3, 10, 2))
    assert Distribution.parse("uniform") == Distribution("uniform", ())
    for bad in ("nope", "zipf(1,2)", "planted(1)", "uniform(3)", "zipf(0)",
                "planted(0,5,5)", "zipf(1.1"):
        with pytest.raises(ValueError):
            Distribution.parse(bad)


def test_generate_validation():
    with pytest.raises(ValueError):
        generate("uniform", n=0, m=5, seed=1)
    with pytest.raises(ValueError):
        generate("uniform", n=5, m=0, seed=1)
    with pytest.raises(ValueError):
        generate("planted(10,100,5)", n=10, m=20, seed=1)  # heavy_count >= n
