import pytest

from densewire_evaluator.data import write_synthetic_dataset


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cifar")
    write_synthetic_dataset(root, n_train=400, n_test=200, seed=0)
    return root
