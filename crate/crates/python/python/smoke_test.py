"""Exercises every binding once on a small synthetic band."""

import json
import tempfile
from pathlib import Path

import specocc

SLOTS_PER_DAY = 1440


def main():
    band = specocc.make_band("test", 0.0, 16.0, 16)
    gen = specocc.generator("a", {"periodic": {"period_slots": 30, "duty_cycle": 0.5}}, seed=3)
    power, truth = specocc.generate(gen, band, SLOTS_PER_DAY)
    assert len(power) == SLOTS_PER_DAY and len(power[0]) == 16
    assert len(truth) == SLOTS_PER_DAY

    criteria, report = specocc.calibrate(power[:216])
    assert report["chosen_gamma"] == criteria["gamma"]
    status = specocc.threshold_status(power, criteria["gamma"])
    occ = specocc.slot_occupancy(status)
    assert all(0.0 <= x <= 1.0 for x in occ)
    assert len(specocc.bin_occupancy(status)) == 16
    labels = specocc.label_pu(status, criteria)
    assert set(labels) <= {0, 1}
    assert len(specocc.split_labels(occ, 0.5)) == SLOTS_PER_DAY

    n1 = 216
    train_x, train_y = status[:n1], labels[:n1]
    test_x, test_y = status[n1:], labels[n1:]
    for kind in ("nbc", "dt", "svm", "lr"):
        model = specocc.fit(kind, train_x, train_y)
        pred = model.predict(test_x)
        m = specocc.metrics(pred, test_y)
        assert m["correct"] + m["misdetections"] + m["false_alarms"] == m["total"]
        again = specocc.Model.from_json(kind, model.to_json())
        assert again.predict(test_x) == pred
        print(f"{kind}: ca {m['ca']:.4f}")

    swarm = specocc.swarm_config()
    swarm.update({"swarm_size": 4, "iterations": 3})
    cut = int(n1 * 0.8)
    tuned = specocc.svm_ffa_fit(train_x[:cut], train_y[:cut], train_x[cut:], train_y[cut:], swarm)
    assert tuned["model"].kind == "svm"
    assert len(tuned["history"]) == swarm["iterations"] + 1

    result = specocc.ffa_optimize(lambda x: -(x - 2.0) ** 2, {**swarm, "bounds": [0.0, 4.0], "iterations": 20})
    assert abs(result["best_position"] - 2.0) < 0.5

    obs = specocc.discretize_observations(occ, 0.5)
    hmm = specocc.estimate_hmm(labels[:n1], obs[:n1], 2)
    assert specocc.hmm_forward(hmm, obs[:50]) <= 0.0
    states, logp = specocc.hmm_viterbi(specocc.default_hmm(), obs[n1:])
    assert len(states) == SLOTS_PER_DAY - n1 and logp <= 0.0

    blocks = specocc.free_blocks(test_y, 5)
    report = specocc.outage_probability(test_y, occ[n1:], 5)
    assert len(report["free_blocks"]) == len(blocks)
    assert 0.0 <= report["p_outage"] <= 1.0

    config_path = Path(__file__).resolve().parents[3] / "configs" / "quick.json"
    config = specocc.load_config(str(config_path))
    config.update({"days": 1, "classifiers": ["nbc", "trained-hmm"], "split_ratios": [0.15]})
    with tempfile.TemporaryDirectory() as out:
        result = specocc.run_experiment(config, out)
        assert len(result["rows"]) == 2
        assert (Path(out) / "comparison.csv").exists()
    print(json.dumps(result["summaries"], indent=1))

    try:
        specocc.fit("knn", train_x, train_y)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown classifier accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
