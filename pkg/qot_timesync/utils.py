import re
from typing import List

from .exceptions import ConfigurationError


def generate_progress_bar(
    iteration,
    total,
    prefix="",
    suffix="",
    decimals=1,
    length=100,
    fill="#",
) -> str:
    percent = ("{0:." + str(decimals) + "f}").format(100 * (iteration / float(total)))
    filled_length = int(length * iteration // total)
    bar = fill * filled_length + "-" * (length - filled_length)
    return f"{prefix} |{bar}| {percent}% {suffix}"


def get_valid_filename(name) -> str:
    """Output file name with spaces turned to underscores, keeps alphanumerics, dash, underscore and dot"""
    cleaned = str(name).strip().replace(" ", "_")
    return re.sub(r"(?u)[^-\w.]", "", cleaned)


def parse_seeds(text: str, base_seed: int) -> List[int]:
    """'5' gives five seeds starting at base_seed, '1,4,9' gives that list"""
    text = text.strip()
    try:
        if "," in text:
            seeds = [int(item) for item in text.split(",") if item.strip()]
        else:
            seeds = list(range(base_seed, base_seed + int(text)))
    except ValueError:
        raise ConfigurationError(f"invalid seed selection {text!r}", ["seeds"])
    if not seeds or any(seed < 0 for seed in seeds):
        raise ConfigurationError(f"seed selection {text!r} must give nonnegative seeds", ["seeds"])
    return seeds


def parse_float_list(text: str, name: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise ConfigurationError(f"invalid list of numbers {text!r}", [name])
