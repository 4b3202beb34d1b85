"""Regenerate the bundled track JSON files from the analytic builders."""

from pathlib import Path

from trackday import tracks

DATA = Path(__file__).resolve().parent.parent / "src" / "trackday" / "data"

if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    tracks.write_track_json(tracks.hairpin_track(), DATA / "hairpin.json")
    tracks.write_track_json(tracks.oval_track(), DATA / "oval.json")
    print(f"wrote {DATA}/hairpin.json and {DATA}/oval.json")
