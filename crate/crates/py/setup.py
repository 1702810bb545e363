"""Build the cfrac_py extension module by delegating to cargo.

Install with:

    pip install -e crates/py --no-build-isolation
"""

import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

HERE = Path(__file__).resolve().parent


class CargoBuildExt(build_ext):
    def build_extension(self, ext):
        subprocess.run(
            ["cargo", "build", "--release", "-p", "cfrac-py"],
            cwd=HERE,
            check=True,
        )
        target = HERE.parent.parent / "target" / "release"
        candidates = [
            target / "libcfrac_py.so",
            target / "libcfrac_py.dylib",
            target / "cfrac_py.dll",
        ]
        built = next(p for p in candidates if p.exists())
        dest = Path(self.get_ext_fullpath(ext.name))
        dest.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(built, dest)
        print(f"copied {built} -> {dest}", file=sys.stderr)


setup(
    name="cfrac-py",
    version="0.1.0",
    description="Continued fractions of convex sets and functions",
    ext_modules=[Extension("cfrac_py", sources=[])],
    cmdclass={"build_ext": CargoBuildExt},
    zip_safe=False,
)
