"""Quick end-to-end check of the dwsc extension module."""

import json

import dwsc


def main():
    inst = dwsc.Instance.synthetic(60, 30, 4, seed=5)
    assert len(inst) == 60
    assert inst.is_feasible()
    t_max, c_max = inst.bounds
    assert t_max > 0 and c_max > 0

    full = inst.evaluate(inst.services)
    assert full is not None
    assert 0.0 <= full["fitness"] <= 1.0
    assert full["dot"].startswith("digraph")

    res = dwsc.evolve(inst, population_size=20, generations=10, seed=3)
    assert 0.0 <= res.best_fitness <= 1.0
    assert all(a >= b for a, b in zip(res.best_f, res.best_f[1:])), "best_f must not increase"
    again = dwsc.evolve(inst, population_size=20, generations=10, seed=3)
    assert again.best_f == res.best_f

    doc = json.loads(res.to_json())
    assert doc["schema"] == "dwsc-result/1"
    assert doc["instance_digest"] == inst.digest

    assert dwsc.lcs([1, 2, 3, 4], [2, 4, 3]) in ([2, 3], [2, 4])

    copy = dwsc.Instance.from_json(inst.to_json())
    assert copy.digest == inst.digest

    try:
        dwsc.Instance.from_json("{}")
    except ValueError:
        pass
    else:
        raise AssertionError("malformed bundle accepted")

    print(f"ok: best F {res.best_fitness:.6f} using {len(res.best_services)} services")


if __name__ == "__main__":
    main()
