from pathlib import Path
from typing import Union

import numpy as np

from cbSpMV.utils.generation import GenerationUtils


class VectorFileGenerator:
    @staticmethod
    def generate(values: np.ndarray) -> str:
        return "".join(f"{v}\n" for v in GenerationUtils.format_values(values))

    @staticmethod
    def write(values: np.ndarray, path: Union[str, Path]):
        Path(path).write_text(VectorFileGenerator.generate(values))
