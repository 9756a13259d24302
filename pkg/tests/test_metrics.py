"""Evaluation metrics against hand cases and closed-form oracles."""

import json

import numpy as np
import pytest

from warpalign.errors import InvalidInputError
from warpalign.metrics import (
    EvalReport,
    average_precision_at_k,
    dtw_accuracy,
    evaluate,
    kendall_tau,
    phase_classification,
    phase_progression,
    write_report_csv,
    write_report_json,
)
from warpalign.synthdata import generate_dataset


def line_embs(n, d=3, lo=0.0, hi=1.0):
    # Frames spread along a line: nearest-neighbor order is positional.
    u = np.linspace(lo, hi, n)
    out = np.zeros((n, d))
    out[:, 0] = u
    return out


class TestKendallTau:
    def test_self_alignment_is_one(self):
        z = line_embs(8)
        assert kendall_tau(z, z) == 1.0

    def test_reversal_is_minus_one(self):
        z = line_embs(8)
        assert kendall_tau(z, z[::-1]) == -1.0

    def test_one_swapped_neighbor_hand_value(self):
        # Second video ordered so frame 0 retrieves index 1 and frame 1
        # retrieves index 0; of the 3 pairs only (0,1) flips:
        # tau = (2 - 1) / 3.
        zA = np.array([[0.0, 0], [1.0, 0], [2.0, 0]])
        zB = np.array([[1.0, 0], [0.0, 0], [2.0, 0]])
        assert kendall_tau(zA, zB) == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_duplicate_neighbors_count_discordant(self):
        # Both A frames retrieve corpus frame 0: p == q, discordant.
        zA = np.array([[0.0, 0], [0.1, 0]])
        zB = np.array([[0.0, 0], [5.0, 0]])
        assert kendall_tau(zA, zB) == -1.0

    def test_needs_two_frames(self):
        with pytest.raises(InvalidInputError):
            kendall_tau(line_embs(1), line_embs(4))

    def test_nearest_neighbor_tie_breaks_to_smallest_index(self):
        # Corpus frames 0 and 2 are equidistant from each query; the tie
        # must resolve to index 0 for both, which makes p == q.
        zA = np.array([[1.0, 0.0], [1.0, 0.0]])
        zB = np.array([[0.0, 0.0], [9.0, 9.0], [2.0, 0.0]])
        assert kendall_tau(zA, zB) == -1.0


class TestPhaseClassification:
    def test_separable_toy_reaches_one(self):
        rng = np.random.default_rng(0)
        centers = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]])
        labels = np.repeat([0, 1, 2], 30)
        train = centers[labels] + 0.2 * rng.standard_normal((90, 2))
        test = centers[labels] + 0.2 * rng.standard_normal((90, 2))
        acc = phase_classification(train, labels, test, labels, fractions=(1.0,))
        assert acc[1.0] == 1.0

    def test_shuffled_labels_near_chance(self):
        rng = np.random.default_rng(1)
        train = rng.standard_normal((400, 4))
        test = rng.standard_normal((200, 4))
        y_train = rng.integers(0, 4, size=400)
        y_test = rng.integers(0, 4, size=200)
        acc = phase_classification(train, y_train, test, y_test, fractions=(1.0,))
        assert abs(acc[1.0] - 0.25) < 0.1

    def test_fraction_subsample_is_stratified_prefix(self):
        # With fraction 0.5, only the first half of each class trains.
        # Poison the second half with flipped labels far away: accuracy
        # at 0.5 stays perfect, at 1.0 it degrades.
        labels = np.array([0] * 10 + [1] * 10)
        train = np.zeros((20, 2))
        train[:5, 0] = -1.0  # class 0 prefix
        train[5:10, 0] = 5.0  # class 0 suffix, sits in class-1 land
        train[10:15, 0] = 1.0  # class 1 prefix
        train[15:20, 0] = -5.0  # class 1 suffix, sits in class-0 land
        test = np.zeros((4, 2))
        test[:2, 0] = -1.0
        test[2:, 0] = 1.0
        y_test = np.array([0, 0, 1, 1])
        acc = phase_classification(train, labels, test, y_test, fractions=(0.5, 1.0))
        assert acc[0.5] == 1.0
        assert acc[1.0] < 1.0

    def test_more_labels_help_on_real_data(self):
        rng = np.random.default_rng(3)
        centers = np.array([[0.0, 0.0], [1.5, 0.0]])
        labels = np.repeat([0, 1], 50)
        train = centers[labels] + 0.8 * rng.standard_normal((100, 2))
        test = centers[labels] + 0.8 * rng.standard_normal((100, 2))
        acc = phase_classification(train, labels, test, labels, fractions=(0.1, 1.0))
        assert set(acc) == {0.1, 1.0}
        assert 0.0 <= acc[0.1] <= 1.0 and 0.0 <= acc[1.0] <= 1.0

    def test_rejects_bad_fraction(self):
        with pytest.raises(InvalidInputError):
            phase_classification(np.zeros((4, 2)), [0, 0, 1, 1],
                                 np.zeros((2, 2)), [0, 1], fractions=(0.0,))

    def test_rejects_label_mismatch(self):
        with pytest.raises(InvalidInputError):
            phase_classification(np.zeros((4, 2)), [0, 1],
                                 np.zeros((2, 2)), [0, 1])


class TestPhaseProgression:
    def test_matches_lstsq_oracle(self, rng):
        train = rng.standard_normal((60, 5))
        w_true = rng.standard_normal(5)
        targets = train @ w_true + 0.3
        test_emb = rng.standard_normal((20, 5))
        test_target = test_emb @ w_true + 0.3 + 0.1 * rng.standard_normal(20)

        got = phase_progression(train, targets, [(test_emb, test_target)])

        xb = np.hstack([train, np.ones((60, 1))])
        coef, *_ = np.linalg.lstsq(xb, targets, rcond=None)
        pred = np.hstack([test_emb, np.ones((20, 1))]) @ coef
        ss_res = np.sum((test_target - pred) ** 2)
        ss_tot = np.sum((test_target - test_target.mean()) ** 2)
        assert got == pytest.approx(1.0 - ss_res / ss_tot, abs=1e-12)

    def test_perfect_linear_relation_scores_one(self, rng):
        train = rng.standard_normal((40, 3))
        w = np.array([1.0, -2.0, 0.5])
        test = rng.standard_normal((15, 3))
        got = phase_progression(train, train @ w, [(test, test @ w)])
        assert got == pytest.approx(1.0, abs=1e-9)

    def test_constant_target_video_scores_zero(self, rng):
        train = rng.standard_normal((30, 3))
        targets = rng.uniform(size=30)
        flat = (rng.standard_normal((10, 3)), np.full(10, 0.5))
        assert phase_progression(train, targets, [flat]) == 0.0

    def test_averages_over_videos(self, rng):
        train = rng.standard_normal((40, 3))
        w = np.array([1.0, 0.0, 0.0])
        targets = train @ w
        good = (rng.standard_normal((12, 3)),)
        good = (good[0], good[0] @ w)
        flat = (rng.standard_normal((12, 3)), np.zeros(12))
        avg = phase_progression(train, targets, [good, flat])
        assert avg == pytest.approx(0.5, abs=1e-9)

    def test_rejects_empty_test_sets(self, rng):
        with pytest.raises(InvalidInputError):
            phase_progression(rng.standard_normal((10, 2)), np.zeros(10), [])


class TestAveragePrecisionAtK:
    def test_brute_force_oracle_six_frames(self):
        query = np.array([[0.0, 0.0], [3.0, 0.0]])
        q_labels = [0, 1]
        corpus = np.array(
            [[0.1, 0.0], [0.2, 0.0], [2.9, 0.0], [3.1, 0.0], [10.0, 0.0], [0.3, 0.0]]
        )
        c_labels = np.array([0, 1, 1, 1, 0, 0])
        for K in (1, 2, 3):
            got = average_precision_at_k(query, q_labels, corpus, c_labels, K)
            D = np.linalg.norm(query[:, None, :] - corpus[None, :, :], axis=2)
            expect = np.mean(
                [np.mean(c_labels[np.argsort(D[q], kind="stable")[:K]] == q_labels[q])
                 for q in range(2)]
            )
            assert got == pytest.approx(expect, abs=1e-15)

    def test_perfect_retrieval(self):
        query = line_embs(4)
        corpus = query + 1e-6
        labels = [0, 1, 2, 3]
        assert average_precision_at_k(query, labels, corpus, labels, 1) == 1.0

    def test_tie_breaks_to_smallest_corpus_index(self):
        query = np.zeros((1, 2))
        corpus = np.zeros((3, 2))  # all equidistant
        assert average_precision_at_k(query, [1], corpus, [1, 0, 0], 1) == 1.0
        assert average_precision_at_k(query, [0], corpus, [1, 0, 0], 1) == 0.0

    def test_rejects_out_of_range_k(self):
        query = line_embs(2)
        corpus = line_embs(3)
        with pytest.raises(InvalidInputError):
            average_precision_at_k(query, [0, 1], corpus, [0, 1, 2], 4)
        with pytest.raises(InvalidInputError):
            average_precision_at_k(query, [0, 1], corpus, [0, 1, 2], 0)


class TestDtwAccuracy:
    def test_identical_labeled_videos_score_one(self):
        z = line_embs(6)
        labels = [0, 0, 1, 1, 2, 2]
        assert dtw_accuracy(z, labels, z, labels) == 1.0

    def test_disjoint_labels_score_zero(self):
        z = line_embs(4)
        assert dtw_accuracy(z, [0, 0, 0, 0], z, [1, 1, 1, 1]) == 0.0

    def test_partial_hand_case(self):
        # Identical embeddings force the diagonal path; labels agree on
        # 2 of 4 steps.
        z = line_embs(4)
        assert dtw_accuracy(z, [0, 0, 1, 1], z, [0, 1, 1, 2]) == 0.5

    def test_rejects_label_mismatch(self):
        z = line_embs(4)
        with pytest.raises(InvalidInputError):
            dtw_accuracy(z, [0, 0], z, [0, 0, 0, 0])


@pytest.fixture(scope="module")
def report_and_videos():
    videos = generate_dataset(6, P=3, d_in=5, rng=np.random.default_rng(11),
                              noise=0.05, f_range=(15, 25), style_amp=0.5)
    train, test = videos[:4], videos[4:]

    def embed(x):
        # Cheap deterministic stand-in embedding.
        z = np.hstack([x, x**2])
        return z / np.linalg.norm(z, axis=1, keepdims=True)

    report = evaluate(embed, train, test, fractions=(0.5, 1.0), ks=(2, 4))
    return report, train, test


class TestEvaluate:
    def test_report_fields_and_ranges(self, report_and_videos):
        report, _, _ = report_and_videos
        report.validate()
        assert set(report.phase_classification) == {0.5, 1.0}
        assert set(report.ap_at_k) == {2, 4}
        assert -1.0 <= report.kendall_tau <= 1.0
        assert 0.0 <= report.dtw_accuracy <= 1.0

    def test_report_validate_catches_corruption(self, report_and_videos):
        report, _, _ = report_and_videos
        import dataclasses

        bad = dataclasses.replace(report, kendall_tau=1.5)
        with pytest.raises(InvalidInputError):
            bad.validate()
        bad = dataclasses.replace(report, dtw_accuracy=-0.1)
        with pytest.raises(InvalidInputError):
            bad.validate()

    def test_needs_two_test_videos(self, report_and_videos):
        _, train, test = report_and_videos
        with pytest.raises(InvalidInputError):
            evaluate(lambda x: x, train, test[:1])

    def test_json_writer_round_trips(self, report_and_videos, tmp_path):
        report, _, _ = report_and_videos
        path = tmp_path / "r.json"
        write_report_json(path, report)
        data = json.loads(path.read_text())
        assert data["kendall_tau"] == report.kendall_tau
        assert data["phase_classification"]["0.5"] == report.phase_classification[0.5]
        assert data["ap_at_k"]["2"] == report.ap_at_k[2]

    def test_csv_writer_layout(self, report_and_videos, tmp_path):
        report, _, _ = report_and_videos
        path = tmp_path / "r.csv"
        write_report_csv(path, report)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 2
        headers = lines[0].split(",")
        values = lines[1].split(",")
        assert headers[0] == "kendall_tau"
        assert headers[-1] == "dtw_accuracy"
        assert "classification@0.5" in headers
        assert "ap@2" in headers
        assert float(values[0]) == pytest.approx(report.kendall_tau, abs=1e-6)
