from docs_src.details.tutorial003 import timings, volumes


def test_timings():
    assert set(timings) == {"sampling", "volumes"}
    assert all(seconds >= 0.0 for seconds in timings.values())
    assert len(volumes) == 20
    assert all(volume > 0.0 for volume in volumes)
