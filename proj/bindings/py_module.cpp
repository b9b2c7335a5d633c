#include <pybind11/pybind11.h>

PYBIND11_MODULE(_latlab, m) { m.doc() = "lattice laboratory bindings"; }
