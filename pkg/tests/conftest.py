import pytest

from liftrom.config import FomConfig, PipelineConfig, SweepConfig


@pytest.fixture
def small_config(tmp_path):
    """A scaled-down pipeline that runs in well under a second."""
    return PipelineConfig(
        n_train=20,
        n_test=30,
        eval_times=[5.0, 20.0, 25.0, 30.0],
        output_dir=str(tmp_path / "out"),
        fom=FomConfig(window=[12.0, 20.0], dt=0.01),
        sweeps=SweepConfig(dt_values=[0.01, 0.1, 0.2], train_sizes=[1, 5, 20]),
    )
