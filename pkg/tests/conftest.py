import pytest
import torch

from modeling.hjnet import NetConfig


@pytest.fixture
def generator():
    return torch.Generator().manual_seed(1234)


@pytest.fixture
def two_neuron_cfg():
    return NetConfig(
        n_neurons=2,
        lambda_=1.0,
        omega=10.0,
        epoch_length_T=1.0,
        dt=0.01,
        n_epochs=3,
        external_input=(1.0, -1.0),
        target=(0.5, -0.5),
        seed=7,
    )


@pytest.fixture
def no_plots_args(tmp_path):
    return ["--out", str(tmp_path / "out"), "--no-plots"]
