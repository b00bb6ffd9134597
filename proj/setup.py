"""Builds the pybind11 extension by delegating to the project's CMake."""

import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        extdir = Path(self.get_ext_fullpath(ext.name)).parent.resolve()
        source_dir = Path(__file__).parent.resolve()
        build_dir = Path(self.build_temp).resolve()
        build_dir.mkdir(parents=True, exist_ok=True)
        subprocess.run(
            [
                "cmake",
                "-S", str(source_dir),
                "-B", str(build_dir),
                "-DCMAKE_BUILD_TYPE=Release",
                "-DCONTACTFIT_PYTHON_ONLY=ON",
                f"-DCONTACTFIT_EXT_OUTPUT_DIR={extdir}",
                f"-DPython3_EXECUTABLE={sys.executable}",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_core"],
            check=True,
        )


setup(
    packages=["contactfit"],
    package_dir={"contactfit": "python/contactfit"},
    ext_modules=[CMakeExtension("contactfit._core")],
    cmdclass={"build_ext": CMakeBuild},
)
