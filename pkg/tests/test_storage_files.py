import numpy as np
import pytest

from app import constants
from app.errors import ArtifactError, LabelError
from app.models.graph import EmbeddingMatrix
from app.models.interaction import UserRegistry
from app.models.labels import ClassRegistry, LabelDistribution, Provenance, UserType
from app.storage.files import (
    load_labels,
    read_embedding_tsv,
    read_predictions,
    save_labels,
    write_embedding_tsv,
    write_predictions,
)

HEADER = "user,label,provenance,user_type\n"


def _write(tmp_path, body: str, name: str = "labels.csv"):
    path = tmp_path / name
    path.write_text(HEADER + body)
    return path


def test_single_row(tmp_path):
    labeled = load_labels(_write(tmp_path, "u1,R,manual,public\n"), ClassRegistry(["D", "R"]))
    assert len(labeled) == 1
    entry = labeled.get("u1")
    assert entry.label == 1
    assert entry.provenance is Provenance.MANUAL
    assert entry.user_type is UserType.PUBLIC


def test_conflicting_rows_rejected(tmp_path):
    path = _write(tmp_path, "u1,R,manual,public\nu1,D,weak,public\n")
    with pytest.raises(LabelError, match="conflicting labels for user 'u1'"):
        load_labels(path)


def test_repeated_identical_rows_accepted(tmp_path):
    path = _write(tmp_path, "u1,R,manual,public\nu1,R,manual,public\nu2,D,manual,public\n")
    assert len(load_labels(path)) == 2


def test_unknown_class_rejected(tmp_path):
    path = _write(tmp_path, "u1,X,manual,public\n")
    with pytest.raises(LabelError, match="unknown class name 'X'"):
        load_labels(path, ClassRegistry(["D", "R"]))


def test_five_classes_inferred(tmp_path):
    body = "".join(
        f"u{i},{name},manual,politician\n"
        for i, name in enumerate(["NDP", "LPC", "CPC", "GPC", "PPC"])
    )
    labeled = load_labels(_write(tmp_path, body))
    assert len(labeled.classes) == 5
    assert labeled.classes.names == ("CPC", "GPC", "LPC", "NDP", "PPC")
    assert labeled.by_type(UserType.POLITICIAN) == labeled


@pytest.mark.parametrize(
    "body,match",
    [
        ("u1,R,guess,public\n", "row 2"),
        ("u1,R,manual,robot\n", "row 2"),
    ],
)
def test_bad_enum_values(tmp_path, body, match):
    with pytest.raises(LabelError, match=match):
        load_labels(_write(tmp_path, body + "u2,D,manual,public\n"))


def test_wrong_header(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text("id,party\nu1,R\n")
    with pytest.raises(LabelError, match="header"):
        load_labels(path)


def test_registry_check(tmp_path):
    path = _write(tmp_path, "u1,R,manual,public\nu9,D,manual,public\n")
    registry = UserRegistry(["u1"])
    with pytest.raises(LabelError, match="unknown user 'u9'"):
        load_labels(path, registry=registry)
    load_labels(path, registry=registry, register_unknown=True)
    assert "u9" in registry


def test_labels_round_trip(tmp_path):
    path = _write(tmp_path, "b,R,weak,politician\na,D,manual,public\n")
    labeled = load_labels(path)
    out = tmp_path / "again.csv"
    save_labels(labeled, out)
    assert out.read_text() == path.read_text()
    assert load_labels(out) == labeled


def test_predictions_round_trip(tmp_path):
    classes = ClassRegistry(["D", "R"])
    users = UserRegistry(["a", "b", "c"])
    dist = LabelDistribution(np.array([[0.7, 0.2], [0.0, 0.0], [0.1, 0.6]]), users, classes)
    predicted = np.array([0, constants.ABSTAIN, 1])
    path = tmp_path / "pred.csv"
    write_predictions(dist, predicted, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "user,predicted_label,score,abstained"
    assert lines[2] == "b,,0.0,True"
    got_users, got = read_predictions(path, classes)
    assert got_users == users
    np.testing.assert_array_equal(got, predicted)


def test_embedding_tsv_is_bit_exact(tmp_path, rng):
    emb = EmbeddingMatrix(UserRegistry(["x", "y", "z"]), rng.normal(size=(3, 4)), "retweet")
    path = tmp_path / "emb.tsv"
    write_embedding_tsv(emb, path)
    assert path.read_text().startswith("#dim=4 signal=retweet\n")
    back = read_embedding_tsv(path)
    assert back.users == emb.users
    assert back.signal == "retweet"
    np.testing.assert_array_equal(back.vectors, emb.vectors)


def test_embedding_tsv_keeps_na_like_user_ids(tmp_path, rng):
    users = UserRegistry(["NA", "null", "nan", "N/A", "u1"])
    emb = EmbeddingMatrix(users, rng.normal(size=(5, 2)), "retweet")
    path = tmp_path / "emb.tsv"
    write_embedding_tsv(emb, path)
    back = read_embedding_tsv(path)
    assert list(back.users) == ["NA", "null", "nan", "N/A", "u1"]
    np.testing.assert_array_equal(back.vectors, emb.vectors)


def test_empty_embedding_tsv(tmp_path):
    path = tmp_path / "emb.tsv"
    path.write_text("#dim=3 signal=friend\n")
    emb = read_embedding_tsv(path)
    assert len(emb.users) == 0
    assert emb.dim == 3


def test_embedding_tsv_width_mismatch(tmp_path):
    path = tmp_path / "emb.tsv"
    path.write_text("#dim=3 signal=friend\nu1\t1.0\t2.0\n")
    with pytest.raises(ArtifactError, match="dim=3"):
        read_embedding_tsv(path)
