import hypersent.model


def pytest_configure(config):
    # Test builds assert the attention/probability/incidence invariants on
    # every forward pass.
    hypersent.model.STRICT_CHECKS = True
