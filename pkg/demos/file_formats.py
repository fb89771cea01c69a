"""Write a batch file and a fitted model, read both back and estimate from the reloaded data."""
import tempfile
from pathlib import Path

from airate import ChannelScenario, build_qam, fit, get_kind, mi_rate, simulate
from airate.io import model_from_text, model_to_text, read_batch, write_batch

c = build_qam(16)
batch = simulate(c, ChannelScenario("phase_noise", 16.0, n=20_000, seed=4, phase_std=0.03))
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "run.bin"
    write_batch(batch, path, c)
    print(f"{path.name}: {path.stat().st_size} bytes")
    again = read_batch(path)
    assert again.equals(batch)

    model = fit(get_kind("2D-CG"), c, again)
    text = model_to_text(model)
    print(text.splitlines()[0])
    reloaded = model_from_text(text)
    print(f"MI from reloaded model (training data): {mi_rate(again, reloaded, allow_overlap=True).rate:.4f} bit/4D")
