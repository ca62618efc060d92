"""CMake-driven build of the maff python extension.

The compiled module `maff._maff` is produced by the project's CMake tree
(target `_maff`); this shim configures and builds that target, then drops
the shared object where setuptools expects the extension.
"""

import shutil
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
        source_dir = Path(__file__).parent.resolve()
        build_dir = Path(self.build_temp).resolve()
        build_dir.mkdir(parents=True, exist_ok=True)
        subprocess.run(
            [
                "cmake",
                "-S", str(source_dir),
                "-B", str(build_dir),
                "-DCMAKE_BUILD_TYPE=Release",
                f"-DPython3_EXECUTABLE={sys.executable}",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_maff", "-j"],
            check=True,
        )
        built = next((build_dir / "python" / "maff").glob("_maff*.so"))
        target = Path(self.get_ext_fullpath(ext.name)).resolve()
        target.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy2(built, target)


setup(
    packages=["maff"],
    package_dir={"maff": "python/maff"},
    ext_modules=[CMakeExtension("maff._maff")],
    cmdclass={"build_ext": CMakeBuild},
    zip_safe=False,
)
