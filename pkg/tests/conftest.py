import numpy as np
import pytest

from modelmatch.encoders import EncoderKind, EncoderProfile, MockEncoder
from modelmatch.kernels import KernelConfig
from modelmatch.types import PromptOrigin, Requirement, Specification


@pytest.fixture
def cfg():
    return KernelConfig(gamma=0.02)


@pytest.fixture
def mock_encoder():
    return MockEncoder(EncoderProfile(name="test-mock", embedding_dim=16, kind=EncoderKind.MOCK))


def random_unit_rows(rng, n, dim):
    m = rng.normal(size=(n, dim))
    return (m / np.linalg.norm(m, axis=1, keepdims=True)).astype(np.float32)


@pytest.fixture
def random_spec():
    def _make(rng, n_pairs=4, dim=8, model_id="m"):
        return Specification.build(
            model_id,
            random_unit_rows(rng, n_pairs, dim),
            random_unit_rows(rng, n_pairs, dim),
            prompt_origin=PromptOrigin.DEFAULT,
            normalize=False,
        )

    return _make


@pytest.fixture
def random_requirement():
    def _make(rng, n_examples=3, dim=8):
        return Requirement.build(
            random_unit_rows(rng, n_examples, dim),
            random_unit_rows(rng, n_examples, dim),
            normalize=False,
        )

    return _make
