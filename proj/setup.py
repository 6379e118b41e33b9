"""CMake-driven build for the thermix extension module.

The pybind11 target lives in bindings/; this shim configures the project with
tests and host tuning off, builds only that target, and drops the module where
setuptools expects it.
"""

import os
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name: str, sourcedir: str = "") -> None:
        super().__init__(name, sources=[])
        self.sourcedir = os.fspath(Path(sourcedir).resolve())


class CMakeBuild(build_ext):
    def build_extension(self, ext: CMakeExtension) -> None:
        extdir = Path(self.get_ext_fullpath(ext.name)).resolve().parent
        build_temp = Path(self.build_temp) / ext.name
        build_temp.mkdir(parents=True, exist_ok=True)
        cmake_args = [
            f"-DCMAKE_LIBRARY_OUTPUT_DIRECTORY={extdir}{os.sep}",
            f"-DPython3_EXECUTABLE={sys.executable}",
            "-DCMAKE_BUILD_TYPE=Release",
            "-DTHERMIX_BUILD_TESTS=OFF",
            "-DTHERMIX_NATIVE=OFF",
        ]
        subprocess.run(["cmake", ext.sourcedir, *cmake_args], cwd=build_temp, check=True)
        subprocess.run(
            ["cmake", "--build", ".", "--target", "thermix_py", "--parallel", "2"],
            cwd=build_temp,
            check=True,
        )


setup(
    ext_modules=[CMakeExtension("thermix")],
    cmdclass={"build_ext": CMakeBuild},
    zip_safe=False,
)
