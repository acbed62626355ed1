"""Backend twins: the compiled tape executor must match the pure-Python
reference bit for bit, and evaluation must be deterministic."""

import numpy as np
import pytest

from algmech import parse
from algmech.backend import active_backend, available_backends
from algmech.tape import compile_program

# expressions valid on all of R^3, and the signed points they run at
ANYWHERE = (
    [
        "x + y*z",
        "x*y*z - x/y",
        "sin(x)*cos(y) + tan(z)/(2 + x^2)",
        "exp(sin(x)) / (1 + y^2)",
        "log(2 + x^2) * sqrt(3 + z^2)",
        "abs(x - y)^3",
        "x^5 + y^-3",
        "-(x*y) - (-(z))",
        "0.5*(x^2 + y^2 + z^2)",
    ],
    [
        (0.3, 0.7, 1.1),
        (1.0, -1.0, 2.0),
        (-0.5, 2.0, 0.9),
        (2.2, 0.4, -1.3),
        (0.01, 1.5, 3.0),
    ],
)

# expressions needing positive bases, with positive-orthant points
POSITIVE = (
    ["z^2.5", "2^x + x^y", "log(x) + sqrt(y)"],
    [(0.3, 0.7, 1.1), (1.0, 2.0, 0.4), (2.2, 0.4, 1.3)],
)


def _cases():
    for exprs, points in (ANYWHERE, POSITIVE):
        for text in exprs:
            e = parse(text)
            for n_seeds in (0, 3):
                yield compile_program([e], ("x", "y", "z"), n_seeds), text, points


@pytest.mark.skipif(len(available_backends()) < 2,
                    reason="compiled backend not built")
def test_backends_bit_identical():
    backends = available_backends()
    pure = backends["pure"]
    comp = backends["compiled"]
    for prog, text, points in _cases():
        for point in points:
            vals = np.asarray(point)
            a = pure(prog, vals)
            b = comp(prog, vals)
            assert a.tobytes() == b.tobytes(), \
                f"backend mismatch for {text!r} at {point}"


def test_backends_raise_identical_domain_errors():
    from algmech import DomainError
    prog = compile_program([parse("log(x)")], ("x",), 1)
    for fn in available_backends().values():
        with pytest.raises(DomainError):
            fn(prog, np.array([-1.0]))


def test_backends_agree_on_ieee_division():
    prog = compile_program([parse("1/x"), parse("(-2)/x"), parse("x^-1")],
                           ("x",), 1)
    for fn in available_backends().values():
        out = fn(prog, np.array([0.0]))
        assert out[0, 0] == np.inf
        assert out[1, 0] == -np.inf
        assert out[2, 0] == np.inf


def test_active_backend_reports():
    assert active_backend() in ("compiled", "pure")


def test_run_is_deterministic():
    fn = available_backends()["pure"]
    prog = compile_program([parse("sin(x)*exp(y)")], ("x", "y"), 2)
    vals = np.array([0.37, -0.81])
    assert fn(prog, vals).tobytes() == fn(prog, vals).tobytes()
