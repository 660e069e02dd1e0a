"""Smoke test for the uglseg extension module.

Build and install first, e.g. `maturin develop --release` in crates/python.
"""

import math
import os
import tempfile

import uglseg


def main():
    assert uglseg.bmes(["他", "来到", "北京"]) == "SBEBE"
    assert uglseg.words_from_bmes(list("他来到北京"), "SBEBE") == ["他", "来到", "北京"]

    assert abs(uglseg.error_rate(0.9, 0.9) - 0.1) < 1e-12
    assert uglseg.update_rate(0.5) == 0.0
    weights, z = uglseg.update_similarity([0.5, 0.5], 1.0, [[True], [False]])
    assert abs(weights[0] - math.e / (math.e + 1)) < 1e-12
    assert abs(z - (math.e + 1) / 2) < 1e-12
    assert abs(uglseg.error_rate_reduction(93.3, 95.6) - 34.33) < 0.01

    gold = [["他", "来到", "北京"]]
    assert uglseg.score(gold, gold)["f1"] == 1.0

    toy = uglseg.toy_corpus(0, 50)
    model = uglseg.Model(toy, dim=16, seed=7)
    losses, dev_f = model.train(toy, dev=toy, epochs=40, seed=7)
    assert len(losses) == 40 and losses[-1] < losses[0]
    assert dev_f >= 0.99, dev_f
    sentence = "".join(toy[0])
    assert "".join(model.segment(sentence)) == sentence

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "toy.ugl")
        model.save(path)
        again = uglseg.Model.load(path)
        assert again.vocab_hash == model.vocab_hash
        assert again.segment(sentence) == model.segment(sentence)

    high, low, dev = uglseg.transfer_task(0)
    teacher = uglseg.Model(high, dim=8, window=3, bigrams=False, seed=1)
    teacher.train(high[:100], epochs=1)
    student, history = uglseg.train_transfer(teacher, high[:100], low, epochs=2)
    assert len(history) == 2
    assert all(abs(h["sum_w"] - 1.0) < 1e-9 for h in history)
    print("student dev F", round(student.evaluate(dev)["f1"], 4))
    print("smoke test passed")


if __name__ == "__main__":
    main()
