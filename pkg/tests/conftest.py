import pytest
from hypothesis import settings

from ptrmpc.fieldcore import select_field_params
from ptrmpc.harness import PartyConfig, Runtime

settings.register_profile("repo", deadline=None, max_examples=60)
settings.load_profile("repo")


def make_runtime(bits=32, cmp=True, seed=0, n=3, t=1, kappa=48, transport="inproc"):
    params = select_field_params(bits, cmp, kappa)
    return Runtime(params, PartyConfig(n=n, t=t, seed=seed, kappa=kappa, transport=transport))


@pytest.fixture
def rt():
    r = make_runtime()
    yield r
    r.close()


def signed(rt, v):
    return rt.signed(rt.reveal(v))
