import numpy as np
import pytest

from modelmatch import errors
from modelmatch.assignment import GeneratorHandle
from modelmatch.registry import ModelHub
from modelmatch.types import PromptOrigin, PromptSet, Requirement, specifications_equal

from conftest import random_unit_rows


def pairs(rng, n=4, dim=8):
    return random_unit_rows(rng, n, dim), random_unit_rows(rng, n, dim)


def populate(hub, rng, n_models=3, n_pairs=4, dim=8):
    for i in range(n_models):
        z, q = pairs(rng, n_pairs, dim)
        hub.submit(
            model_id=f"m{i:02d}",
            display_name=f"Model {i}",
            download_count=10 * (i + 1),
            image_embeddings=z,
            prompt_embeddings=q,
        )
    return hub


def requirement_for(hub, model_id, n=2):
    spec = hub.get(model_id).specification
    return Requirement.build(
        spec.image_embeddings[:n], spec.prompt_embeddings[:n], normalize=False
    )


class TestSubmission:
    def test_developer_prompt_origin_stored(self, tmp_path):
        rng = np.random.default_rng(0)
        hub = ModelHub(tmp_path)
        z, q = pairs(rng)
        hub.submit(
            model_id="dev-model",
            image_embeddings=z,
            prompt_embeddings=q,
            prompts=["p1", "p2", "p3", "p4"],
            prompt_origin=PromptOrigin.DEVELOPER,
        )
        assert hub.get("dev-model").specification.prompt_origin == PromptOrigin.DEVELOPER

    def test_duplicate_rejected(self):
        rng = np.random.default_rng(1)
        hub = populate(ModelHub(), rng, n_models=1)
        z, q = pairs(rng)
        with pytest.raises(errors.DuplicateModel):
            hub.submit(model_id="m00", image_embeddings=z, prompt_embeddings=q)

    def test_pre_encoded_sixty_one_pairs(self):
        rng = np.random.default_rng(2)
        hub = ModelHub()
        z, q = pairs(rng, n=61)
        hub.submit(model_id="big", image_embeddings=z, prompt_embeddings=q)
        assert hub.get("big").specification.n_pairs == 61

    def test_generator_submission(self, mock_encoder):
        hub = ModelHub(embedding_dim=16)
        gen = GeneratorHandle(
            model_id="gen", produces="image",
            generate=lambda p, s: f"{p}|{s}".encode(),
        )
        hub.submit(
            model_id="gen",
            generator=gen,
            default_prompts=PromptSet(("a", "b", "c")),
            encoder=mock_encoder,
        )
        assert hub.get("gen").specification.n_pairs == 3

    def test_dim_enforced_registry_wide(self):
        rng = np.random.default_rng(3)
        hub = populate(ModelHub(), rng, n_models=1, dim=8)
        z, q = pairs(rng, dim=6)
        with pytest.raises(errors.DimensionMismatch):
            hub.submit(model_id="odd", image_embeddings=z, prompt_embeddings=q)

    def test_missing_inputs(self):
        with pytest.raises(errors.InvalidInput):
            ModelHub().submit(model_id="nothing")


class TestQuery:
    def test_single_model_rank_one_any_method(self):
        rng = np.random.default_rng(4)
        hub = populate(ModelHub(), rng, n_models=1)
        req = requirement_for(hub, "m00")
        for method in ("pmi", "pmi_unweighted", "rkme", "baseline"):
            result = hub.identify(req, method=method)
            assert result.entries[0].model_id == "m00"
            assert result.entries[0].rank == 1

    def test_baseline_top1_is_max_download(self):
        rng = np.random.default_rng(5)
        hub = populate(ModelHub(), rng, n_models=4)
        result = hub.identify(None, method="baseline", top_k=1)
        assert result.entries[0].model_id == "m03"

    def test_empty_registry(self):
        with pytest.raises(errors.EmptyRegistry):
            ModelHub().identify(None, method="baseline")

    def test_repeat_query_identical(self):
        rng = np.random.default_rng(6)
        hub = populate(ModelHub(), rng)
        req = requirement_for(hub, "m01")
        r1 = hub.identify(req, method="pmi")
        r2 = hub.identify(req, method="pmi")
        assert r1 == r2

    def test_tag_filter(self):
        rng = np.random.default_rng(7)
        hub = ModelHub()
        for i, tags in enumerate([("anime",), ("photo",), ("anime", "hd")]):
            z, q = pairs(rng)
            hub.submit(
                model_id=f"m{i}", image_embeddings=z, prompt_embeddings=q, tags=tags
            )
        req = requirement_for(hub, "m0")
        result = hub.identify(req, method="baseline", tags=("anime",))
        assert {e.model_id for e in result.entries} == {"m0", "m2"}
        with pytest.raises(errors.EmptyRegistry):
            hub.identify(req, method="pmi", tags=("missing",))

    def test_model_not_found(self):
        with pytest.raises(errors.ModelNotFound):
            ModelHub().get("ghost")


class TestPersistence:
    def test_reload_round_trip(self, tmp_path):
        rng = np.random.default_rng(8)
        hub = populate(ModelHub(tmp_path), rng)
        req = requirement_for(hub, "m02")
        want = [(e.model_id, e.distance) for e in hub.identify(req).entries]

        reopened = ModelHub(tmp_path)
        assert len(reopened) == 3
        for record in hub.records():
            assert specifications_equal(
                record.specification, reopened.get(record.model_id).specification
            )
        got = [(e.model_id, e.distance) for e in reopened.identify(req).entries]
        assert got == want

    def test_prompt_sidecar_written(self, tmp_path):
        rng = np.random.default_rng(9)
        hub = ModelHub(tmp_path)
        z, q = pairs(rng, n=2)
        hub.submit(
            model_id="sidecar",
            image_embeddings=z,
            prompt_embeddings=q,
            prompts=["alpha", "beta"],
        )
        sidecar = tmp_path / "specs" / "sidecar.prompts.json"
        assert sidecar.exists()
        assert "alpha" in sidecar.read_text()


class TestExportImport:
    def test_round_trip_preserves_scores_bit_exactly(self, tmp_path):
        rng = np.random.default_rng(10)
        hub = populate(ModelHub(), rng, n_models=4)
        req = requirement_for(hub, "m01")
        want = [(e.model_id, e.distance) for e in hub.identify(req).entries]

        bundle = tmp_path / "hub.bundle"
        assert hub.export_specs(bundle) == 4

        fresh = ModelHub()
        assert fresh.import_specs(bundle) == 4
        got = [(e.model_id, e.distance) for e in fresh.identify(req).entries]
        assert got == want  # float-exact equality

    def test_import_clash(self, tmp_path):
        rng = np.random.default_rng(11)
        hub = populate(ModelHub(), rng, n_models=2)
        bundle = tmp_path / "hub.bundle"
        hub.export_specs(bundle)
        with pytest.raises(errors.DuplicateModel):
            hub.import_specs(bundle)
        assert len(hub) == 2  # nothing partially imported

    def test_empty_export(self, tmp_path):
        bundle = tmp_path / "empty.bundle"
        assert ModelHub().export_specs(bundle) == 0
        fresh = ModelHub()
        assert fresh.import_specs(bundle) == 0
