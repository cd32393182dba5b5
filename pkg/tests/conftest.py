def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: heavier statistical or acceptance-grade runs (minutes)"
    )
