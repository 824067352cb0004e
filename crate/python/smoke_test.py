"""Smoke test for the Python bindings.

Build with `cargo build -p fusilli-py` (or `maturin develop -m crates/py/Cargo.toml`)
and run `python3 python/smoke_test.py`.
"""

import importlib.machinery
import importlib.util
import pathlib
import sys


def load():
    try:
        import pyfusilli

        return pyfusilli
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parent.parent
    built = [root / "target" / p / "libpyfusilli.so" for p in ("release", "debug")]
    built = sorted((b for b in built if b.exists()), key=lambda b: b.stat().st_mtime)
    if built:
        loader = importlib.machinery.ExtensionFileLoader("pyfusilli", str(built[-1]))
        spec = importlib.util.spec_from_file_location("pyfusilli", built[-1], loader=loader)
        mod = importlib.util.module_from_spec(spec)
        loader.exec_module(mod)
        return mod
    sys.exit("pyfusilli not built; run `cargo build -p fusilli-py` first")


fz = load()

ex2 = fz.Pipeline.parse(
    "pipeline ex2() = iota(1) |> map(e * e) |> filter(e % 17 > 7) |> take(10) |> sum"
)
assert ex2.name == "ex2"
assert ex2.return_type == "int"
assert ex2.evaluate() == 853
brute = [i * i for i in range(1, 100) if i * i % 17 > 7][:10]
assert ex2.drain() == brute, ex2.drain()

dot = fz.Pipeline.parse(
    "pipeline dot(a: int_array, b: int_array) = zip_with(x * y, of_arr(a), of_arr(b)) |> sum"
)
assert dot.params == [("a", "int_array"), ("b", "int_array")]
assert dot.evaluate([1, 2, 3], [4, 5]) == 14
assert dot.drain([1, 2, 3], [4, 5, 6], cap=2) == [4, 10]

avg = fz.Pipeline.parse("pipeline s(d: double_array) = of_arr(d) |> map(e * 0.5) |> sum")
assert avg.return_type == "double"
assert avg.evaluate([1.0, 3.0]) == 2.0

again = fz.Pipeline.from_json(dot.to_json())
assert str(again) == str(dot)

c = dot.compile_c()
scan = fz.fusion_scan(c)
assert scan["passed"], scan
assert len(c.split()) <= len(dot.compile_c(peval=False).split())
assert not fz.fusion_scan("int f(void) { return g(1); }")["passed"]

names = [n for n, _ in fz.bench_suite()]
assert len(names) == 11 and "zipFilterFilter" in names
for name, text in fz.bench_suite():
    assert fz.fusion_scan(fz.Pipeline.parse(text).compile_c())["passed"], name

for bad in ["pipeline p() = iota(1) |> filter(e + 1) |> sum", "pipeline p() ="]:
    try:
        fz.Pipeline.parse(bad)
    except ValueError as e:
        assert str(e)
    else:
        raise AssertionError(bad)

try:
    dot.evaluate([1])
except ValueError:
    pass
else:
    raise AssertionError("arity not checked")

print("pyfusilli", fz.__version__, "smoke test ok")
