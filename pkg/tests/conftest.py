import pytest

from services.harness_service import HarnessService
from services.instance_service import InstanceService
from services.moduli_service import ModuliService
from services.surface_service import SurfaceService
from services.variation_service import VariationService


@pytest.fixture(scope="session")
def instance_service():
    return InstanceService()


@pytest.fixture(scope="session")
def surface_service(instance_service):
    return SurfaceService(instance_service)


@pytest.fixture(scope="session")
def moduli_service(surface_service):
    return ModuliService(surface_service)


@pytest.fixture(scope="session")
def harness(instance_service, surface_service, moduli_service):
    return HarnessService(instance_service, surface_service, moduli_service)


def _build(instance_service, surface_service, label):
    return surface_service.build_surface(instance_service.load(label))


@pytest.fixture(scope="session")
def ell4(instance_service, surface_service):
    return _build(instance_service, surface_service, "ell4")


@pytest.fixture(scope="session")
def g2_23(instance_service, surface_service):
    return _build(instance_service, surface_service, "g2-23")


@pytest.fixture(scope="session")
def g2_resfree(instance_service, surface_service):
    return _build(instance_service, surface_service, "g2-resfree")


@pytest.fixture(scope="session")
def n3_smoke(instance_service, surface_service):
    return _build(instance_service, surface_service, "n3-smoke")


@pytest.fixture(scope="session")
def ell4_ds(moduli_service, ell4):
    return moduli_service.differentials_for(ell4)


@pytest.fixture(scope="session")
def g2_23_ds(moduli_service, g2_23):
    return moduli_service.differentials_for(g2_23)


@pytest.fixture(scope="session")
def g2_resfree_ds(moduli_service, g2_resfree):
    return moduli_service.differentials_for(g2_resfree)


@pytest.fixture(scope="session")
def ell4_vs(ell4_ds):
    return VariationService(ell4_ds)


@pytest.fixture(scope="session")
def g2_23_vs(g2_23_ds):
    return VariationService(g2_23_ds)


@pytest.fixture(scope="session")
def g2_resfree_vs(g2_resfree_ds):
    return VariationService(g2_resfree_ds)
