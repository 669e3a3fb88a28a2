import pytest

from notefusion import synth
from notefusion.config import LdaParams, RunConfig


def small_synth_config(n=160, seed=3, **note_overrides):
    cfg = synth.SynthConfig(n_patients=n, seed=seed)
    for nt in cfg.notes.values():
        nt.vocab_size = 300
        nt.n_latent_topics = 6
        nt.n_signal_topics = 2
        nt.notes_per_patient = (1, 3)
        nt.doc_length_range = (10, 30)
        for k, v in note_overrides.items():
            setattr(nt, k, v)
    return cfg


def fast_run_config(**kw):
    cfg = RunConfig(lda=LdaParams(topics=5, iterations=30, infer_iterations=20))
    for k, v in kw.items():
        setattr(cfg, k, v)
    return cfg


@pytest.fixture(scope="session")
def small_data_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth_small")
    synth.write_dataset(small_synth_config(), d)
    return d
