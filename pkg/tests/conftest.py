import numpy as np

from valsel.selector import Trajectory


def make_trajectory(
    val: np.ndarray | list,
    criterion: str = "val_ce",
    test_acc: np.ndarray | list | None = None,
    **meta,
) -> Trajectory:
    """Trajectory with `val` placed in one criterion slot and zeros elsewhere."""
    val = np.asarray(val, dtype=np.float64)
    n = val.shape[0]
    fields = {
        name: np.zeros(n)
        for name in (
            "val_ce",
            "val_closs",
            "val_poly1",
            "val_acc",
            "test_ce",
            "test_closs",
            "test_poly1",
            "test_acc",
            "train_acc",
        )
    }
    fields[criterion] = val
    if test_acc is not None:
        fields["test_acc"] = np.asarray(test_acc, dtype=np.float64)
    return Trajectory(**fields, **meta)


def random_plateau_series(rng: np.random.Generator, n: int) -> np.ndarray:
    """Noisy series with deliberate ties and plateaus, like quantized metrics."""
    steps = rng.normal(size=n)
    series = np.cumsum(steps) * rng.uniform(0.2, 2.0)
    series = np.round(series, int(rng.integers(0, 3)))  # coarse rounding -> ties
    if n >= 4 and rng.random() < 0.5:
        # Inject an explicit plateau segment.
        start = int(rng.integers(0, n - 3))
        length = int(rng.integers(2, min(n - start, 8)))
        series[start : start + length] = series[start]
    return series
