"""Random type families for property tests, and an exhaustive core oracle."""

import itertools
import random

from coreforge.model import Binding, Unit, ValueTuple, define_type, unit_key

_EXPRESSIONS = (
    "v1(x({t})) + 1",
    "1 + v1(x({t}))",
    "v1(x({t})) * 2",
    "v1(x({t})) ^ 2",
    "v1(x({t})) - 3",
    "sin(v1(x({t})))",
)
_CHECKS = ("v1(x({t})) > 0", "0 < v1(x({t}))", "v1(x({t})) = v1(x({t}))", "v1(x({t})) != 5")


def _candidates(name: str, rng: random.Random) -> list:
    """A few mutually inequivalent variants of unit *name*; the ``{t}`` slot is filled per type."""
    kind = rng.choice(["const", "inst", "vf", "method"])
    if kind == "const":
        return [("const", v) for v in rng.sample(range(1, 9), rng.randint(1, 3))]
    if kind == "inst":
        return [("inst", None)]
    if kind == "vf":
        return [("vf", e) for e in rng.sample(_CHECKS, rng.randint(1, 2))]
    return [("method", e) for e in rng.sample(_EXPRESSIONS, rng.randint(1, 3))]


def _build(name: str, variant, type_name: str, rng: random.Random) -> Unit:
    kind, payload = variant
    t = rng.choice([type_name, "t_other", None])
    if kind == "const":
        return Unit(name, "data-property", "type-level", ["numeric"], constant_value=ValueTuple.of(payload))
    if kind == "inst":
        return Unit(name, "data-property", "instance-level", ["numeric"])
    text = payload.replace("({t})", f"({t})" if t else "")
    if kind == "vf":
        return Unit(name, "verification-function", expression=text)
    return Unit(name, "method", expression=text, result_label=rng.choice([None, "cm"]))


def random_family(rng: random.Random, max_types: int = 6, max_units: int = 12):
    n = rng.randint(1, max_types)
    pool = {f"u{i}": _candidates(f"u{i}", rng) for i in range(rng.randint(3, 14))}
    types = []
    for k in range(n):
        name = f"t_{k}"
        chosen = rng.sample(sorted(pool), min(len(pool), rng.randint(0, max_units - 1)))
        units = [Unit("x", "data-property", "instance-level", ["numeric"])]
        units += [_build(u, rng.choice(pool[u]), name, rng) for u in chosen]
        spec = [u for u in units if u.kind.value != "method"]
        sig = [u for u in units if u.kind.value == "method"]
        types.append(define_type(name, spec, sig))
    return types


def brute_force_cores(types) -> dict[frozenset, set]:
    """Core of every type subset: the type-level units held by exactly that subset."""
    names = [t.name for t in types]
    holders = {}
    for t in types:
        for u in t.units:
            if u.binding is Binding.TYPE:
                holders.setdefault(unit_key(u), set()).add(t.name)
    cores = {}
    for r in range(1, len(names) + 1):
        for subset in itertools.combinations(names, r):
            s = frozenset(subset)
            members = {k for k, h in holders.items() if h == s}
            if members:
                cores[s] = members
    return cores
