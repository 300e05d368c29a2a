"""Estimator protocol compliance and end-to-end fit/predict behaviour."""

import numpy as np
import pytest

from mwa import FmmSegmenter, InputError, Lexicon
from mwa.estimator import MWAClassifier, check_labels, check_text_array
from mwa.synth import SyntheticTaskSpec, synth_dataset


def small_data(n=60, seed=2):
    spec = SyntheticTaskSpec(
        alphabet_size=8, lexicon=("abc", "bca"), min_len=4, max_len=7, n_samples=n
    )
    data = synth_dataset(spec, seed)
    return [e.text for e in data], [e.label for e in data]


def small_clf(**kw):
    base = dict(dim=8, n_heads=2, epochs=1, batch_size=8, learning_rate=0.05, max_len=10, seed=0)
    base.update(kw)
    return MWAClassifier(**base)


class TestValidationHelpers:
    def test_rejects_single_string(self):
        with pytest.raises(InputError):
            check_text_array("abc")

    def test_rejects_empty_and_non_strings(self):
        with pytest.raises(InputError):
            check_text_array([])
        with pytest.raises(InputError):
            check_text_array(["ok", 3])
        with pytest.raises(InputError):
            check_text_array(["ok", ""])

    def test_max_len(self):
        with pytest.raises(InputError):
            check_text_array(["abcd"], max_len=3)

    def test_label_length(self):
        with pytest.raises(InputError):
            check_labels([0, 1], 3)


class TestEstimatorProtocol:
    def test_get_set_params_round_trip(self):
        clf = small_clf()
        params = clf.get_params()
        assert params["dim"] == 8 and params["sources"] == ("char",)
        clf.set_params(dim=16, epochs=2)
        assert clf.dim == 16 and clf.epochs == 2
        with pytest.raises(InputError):
            clf.set_params(bogus=1)

    def test_params_stored_verbatim(self):
        seg = FmmSegmenter(Lexicon(["ab"]))
        clf = MWAClassifier(sources=(seg,))
        assert clf.get_params()["sources"] == (seg,)

    def test_sklearn_clone_compatibility(self):
        sklearn = pytest.importorskip("sklearn")
        from sklearn.base import clone

        clf = small_clf(dim=16)
        cloned = clone(clf)
        assert cloned is not clf
        assert cloned.get_params() == clf.get_params()

    def test_unfitted_predict_raises(self):
        with pytest.raises(InputError):
            small_clf().predict(["abc"])


class TestFitPredict:
    def test_fit_sets_state_and_predicts_known_classes(self):
        X, y = small_data()
        clf = small_clf().fit(X, y)
        assert clf.classes_ == [0, 1]
        assert len(clf.loss_curve_) == 1
        preds = clf.predict(X[:10])
        assert all(p in (0, 1) for p in preds)
        proba = clf.predict_proba(X[:10])
        assert proba.shape == (10, 2)
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-12)

    def test_score_matches_manual_accuracy(self):
        X, y = small_data()
        clf = small_clf().fit(X, y)
        preds = clf.predict(X)
        assert clf.score(X, y) == sum(p == t for p, t in zip(preds, y)) / len(y)

    def test_deterministic_refit(self):
        X, y = small_data()
        a = small_clf().fit(X, y)
        b = small_clf().fit(X, y)
        assert a.loss_curve_ == b.loss_curve_
        assert a.predict(X) == b.predict(X)

    def test_string_labels_supported(self):
        X, y = small_data()
        names = ["neg", "pos"]
        clf = small_clf().fit(X, [names[t] for t in y])
        assert clf.classes_ == ["neg", "pos"]
        assert set(clf.predict(X[:8])) <= {"neg", "pos"}

    def test_unseen_character_rejected_at_predict(self):
        X, y = small_data()
        clf = small_clf().fit(X, y)
        with pytest.raises(InputError):
            clf.predict(["zzzz"])

    def test_single_class_rejected(self):
        with pytest.raises(InputError):
            small_clf().fit(["ab", "cd"], [1, 1])

    def test_segmenter_source_objects(self):
        X, y = small_data()
        seg = FmmSegmenter(Lexicon(["abc", "bca"]))
        clf = small_clf(sources=(seg,)).fit(X, y)
        assert clf.model_.mwa.sources[0] is seg

    def test_word_sources_beat_nothing_smoke(self):
        # Not a performance assertion, just the multi-source path end to end.
        X, y = small_data(80)
        seg_a = FmmSegmenter(Lexicon(["abc"]))
        seg_b = FmmSegmenter(Lexicon(["bca"]))
        clf = small_clf(sources=(seg_a, seg_b)).fit(X, y)
        assert clf.model_.config.n_sources == 2
        assert clf.score(X, y) >= 0.0
