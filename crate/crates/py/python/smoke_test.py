"""Smoke test for the pytrialsize extension: train, predict, evaluate."""

import os
import tempfile

import pytrialsize as ts


def main():
    assert ts.stem("patients") == "patient"

    low, high = ts.clopper_pearson(44, 50)
    assert round(low * 100) == 76 and round(high * 100) == 95, (low, high)

    a = ts.Abstract(
        "fixture",
        [("Methods", "Between 1996 and 2001, 1477 patients from 70 hospitals in 14 countries were enrolled.")],
        gold_size=1477,
    )
    assert [c[0] for c in a.candidates()] == [1996, 2001, 1477, 70, 14]

    train, test = ts.synthetic_corpus(60, 20, seed=3)
    model = ts.train(train, cost=1.0, gamma=0.05)

    pred = model.predict(a)
    assert pred.size in (1996, 2001, 1477, 70, 14)
    assert pred.probability == max(p for _, p in pred.candidates)

    correct, n, accuracy, ci_low, ci_high = model.evaluate(test)
    assert n == 20 and ci_low <= accuracy <= ci_high
    print(f"synthetic test accuracy {correct}/{n}")

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "model.json")
        model.save(path)
        again = ts.Model.load(path)
        assert [again.predict(x).size for x in test] == [model.predict(x).size for x in test]

    copy = ts.Abstract.from_json(test[0].to_json())
    assert copy.id == test[0].id and copy.gold_size == test[0].gold_size

    try:
        ts.train(train, cost=1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("cost without gamma should be rejected")

    print("smoke test passed")


if __name__ == "__main__":
    main()
