"""Bundled example programs and PRM inputs."""

from importlib.resources import files


def fixture_text(name: str) -> str:
    return (files(__package__) / name).read_text(encoding="utf-8")


def fixture_names() -> list[str]:
    out = []
    for entry in files(__package__).iterdir():
        if entry.name.endswith((".clpbn", ".json")):
            out.append(entry.name)
    return sorted(out)


SCHOOL_DRIVERS = [
    "professor(P), ability(P, X)",
    "professor(P), popularity(P, X)",
    "course(C, P), difficulty(C, X)",
    "student(S), intelligence(S, X)",
    "reg(R, C, S), grade(R, X)",
    "reg(R, C, S), satisfaction(R, X)",
    "course(C, P), rating(C, X)",
    "student(S), ranking(S, X)",
]
