"""Automated flaw detection in NDE images.

Thin re-export of the compiled extension. The extension lives inside the
package in an installed wheel, or on sys.path when using an in-tree CMake
build directory.
"""

try:
    from ndeflaw._core import *  # noqa: F401,F403
    from ndeflaw._core import __doc__  # noqa: F401
except ImportError:  # in-tree build: _core.so sits on sys.path directly
    from _core import *  # noqa: F401,F403
    from _core import __doc__  # noqa: F401
