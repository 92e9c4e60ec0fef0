import numpy as np
import pytest

from teachkit.classify import TrainingSet, predict, train_knn, train_softmax
from teachkit.errors import UnknownState, ValidationError, VersionMismatch
from teachkit.project import (
    AssetInfo,
    dumps_canonical,
    load_project,
    new_project,
    project_to_doc,
    save_keyed_scene,
    save_project,
    validate_project,
)
from teachkit.scene import (
    Behavior,
    ObjectState,
    SceneObject,
    SpatialAnchor,
    SurfaceAnchor,
    Transform,
)
from teachkit.states import EnterTrigger, PlayAudio, StateSet, TriggerBinding
from teachkit.vision import Embedding

from conftest import random_frame


@pytest.fixture
def rng():
    return np.random.default_rng(17)


def unit(v):
    v = np.asarray(v, float)
    return v / np.linalg.norm(v)


def trained_project(rng, head="softmax", dim=16, classes=3):
    project = new_project("demo")
    sset = StateSet(set_id="set0")
    tset = TrainingSet(embedding_dim=dim)
    for i in range(classes):
        sid = f"s{i}"
        sset.add_state(sid)
        tset.add_class(sid)
        for _ in range(6):
            tset.add_sample(sid, Embedding(values=unit(rng.normal(size=dim))))
    project.state_sets = [sset]
    project.model = (train_softmax(tset) if head == "softmax"
                     else train_knn(tset, k=3))
    return project


def test_save_load_save_byte_identical(tmp_path, rng):
    project = trained_project(rng)
    p1 = tmp_path / "a" / "project.json"
    save_project(project, p1)
    loaded = load_project(p1)
    p2 = tmp_path / "b" / "project.json"
    save_project(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_two_saves_byte_identical(tmp_path, rng):
    project = trained_project(rng, head="knn")
    p1 = tmp_path / "one.json"
    p2 = tmp_path / "two.json"
    save_project(project, p1)
    save_project(project, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_empty_project_has_all_collections(tmp_path):
    path = tmp_path / "empty.json"
    save_project(new_project("empty"), path)
    import json

    doc = json.loads(path.read_text())
    for key in ("stateSets", "trainingManifest", "model", "sceneObjects",
                "keyedScenes", "bindings", "behaviors", "settings"):
        assert key in doc
    assert doc["stateSets"] == [] and doc["bindings"] == []
    assert doc["model"] is None


def test_version_is_first_key(tmp_path):
    path = tmp_path / "p.json"
    save_project(new_project(), path)
    text = path.read_text()
    assert text.splitlines()[1].strip().startswith('"version"')


def test_version_mismatch(tmp_path):
    path = tmp_path / "p.json"
    save_project(new_project(), path)
    text = path.read_text().replace('"version": 1', '"version": 2')
    path.write_text(text)
    with pytest.raises(VersionMismatch):
        load_project(path)


def test_validation_lists_every_broken_reference():
    project = new_project()
    sset = StateSet(set_id="set0")
    sset.add_state("s0")
    project.state_sets = [sset]
    project.bindings = [
        TriggerBinding(EnterTrigger("deleted"), [PlayAudio("missing")]),
    ]
    project.scene_objects["o1"] = SceneObject(
        object_id="o1", asset_ref="ghost-asset",
        anchor=SurfaceAnchor(plane_id="no-plane"),
    )
    problems = validate_project(project)
    text = "\n".join(problems)
    assert "deleted" in text
    assert "missing" in text
    assert "ghost-asset" in text
    assert "no-plane" in text
    with pytest.raises(ValidationError):
        save_project(project, "/tmp/should-not-write.json")


def test_unresolvable_asset_blocks_save(tmp_path):
    project = new_project()
    project.scene_objects["o"] = SceneObject(object_id="o", asset_ref="nope",
                                             anchor=SpatialAnchor())
    with pytest.raises(ValidationError):
        save_project(project, tmp_path / "x.json")


def test_model_roundtrip_bit_identical_predictions(tmp_path, rng):
    for head in ("softmax", "knn"):
        project = trained_project(rng, head=head)
        path = tmp_path / f"{head}.json"
        save_project(project, path)
        loaded = load_project(path)
        for _ in range(100):
            emb = Embedding(values=unit(rng.normal(size=16)))
            a = predict(project.model, emb)
            b = predict(loaded.model, emb)
            assert np.array_equal(a.probabilities, b.probabilities)
            assert a.top_state_id == b.top_state_id
            assert a.top_confidence == b.top_confidence


def test_keyed_scene_saved_and_restored(tmp_path, rng):
    project = trained_project(rng)
    project.settings.assets["tree"] = AssetInfo(kind="model3d")
    project.scene_objects["o"] = SceneObject(object_id="o", asset_ref="tree",
                                             anchor=SpatialAnchor())
    snap = {"o": ObjectState(Transform(position=np.array([1.0, 2.0, 3.0])),
                             visible=True, opacity=0.75)}
    save_keyed_scene(project, "s0", snap)
    # overwrite wins
    snap2 = {"o": ObjectState(Transform(position=np.array([9.0, 9.0, 9.0])),
                              visible=False, opacity=0.25)}
    save_keyed_scene(project, "s0", snap2)
    path = tmp_path / "p.json"
    save_project(project, path)
    loaded = load_project(path)
    st = loaded.keyed_scenes["s0"]["o"]
    assert np.allclose(st.transform.position, (9, 9, 9))
    assert st.visible is False
    assert st.opacity == 0.25


def test_keyed_scene_unknown_state(rng):
    project = trained_project(rng)
    with pytest.raises(UnknownState):
        save_keyed_scene(project, "ghost", {})


def test_sample_frames_flushed_to_disk(tmp_path, rng):
    project = trained_project(rng)
    project.sample_frames["s0"] = [random_frame(rng, 16, 12) for _ in range(3)]
    path = tmp_path / "proj" / "p.json"
    save_project(project, path)
    assert project.training_manifest["s0"] == [
        "samples/s0/0000.ppm", "samples/s0/0001.ppm", "samples/s0/0002.ppm"
    ]
    for rel in project.training_manifest["s0"]:
        assert (tmp_path / "proj" / rel).is_file()
    assert project.sample_frames == {}
    # reload and resave: byte-identical
    loaded = load_project(path)
    path2 = tmp_path / "proj2" / "p.json"
    save_project(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_behavior_and_binding_roundtrip(tmp_path, rng):
    project = trained_project(rng)
    project.settings.assets["beep"] = AssetInfo(kind="audio", path="beep.mp3")
    project.settings.assets["car"] = AssetInfo(kind="model3d")
    project.scene_objects["car"] = SceneObject(object_id="car", asset_ref="car",
                                               anchor=SpatialAnchor())
    project.behaviors["fwd"] = Behavior(behavior_id="fwd", object_id="car",
                                        linear_velocity=(0.25, 0.0, 0.0))
    project.bindings = [TriggerBinding(EnterTrigger("s1"), [PlayAudio("beep")])]
    path = tmp_path / "p.json"
    save_project(project, path)
    loaded = load_project(path)
    assert loaded.behaviors["fwd"].linear_velocity == (0.25, 0.0, 0.0)
    assert loaded.bindings[0].actions == [PlayAudio("beep")]


def test_canonical_float_formatting():
    doc = {"a": 0.1 + 0.2, "b": 2.0, "c": -0.0, "d": 1e300, "version": 1}
    text = dumps_canonical(doc)
    import json

    parsed = json.loads(text)
    assert parsed["a"] == 0.1 + 0.2
    assert isinstance(parsed["b"], float) and parsed["b"] == 2.0
    assert isinstance(parsed["c"], float)
    assert parsed["d"] == 1e300
    assert text.splitlines()[1].strip().startswith('"version"')


def test_canonical_rejects_nonfinite():
    with pytest.raises(ValidationError):
        dumps_canonical({"x": float("nan"), "version": 1})
