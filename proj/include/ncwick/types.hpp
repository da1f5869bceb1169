#ifndef NCWICK_TYPES_HPP
#define NCWICK_TYPES_HPP

#include <array>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ncwick {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

constexpr double PI = 3.14159265358979323846264338327950288;

enum class Backend { Torus, Su2, Heisenberg };

std::string backend_name(Backend b);

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Mixing points/fields from different group backends.
class BackendMismatchError : public Error {
public:
    explicit BackendMismatchError(const std::string& msg) : Error(msg) {}
};

// Violated precondition (unknown label, empty slice, bad cutoff, ...).
class InvalidInputError : public Error {
public:
    explicit InvalidInputError(const std::string& msg) : Error(msg) {}
};

// A truncation is too aggressive for the requested tolerance
// (heat-kernel tail, ill-conditioned Plancherel calibration, ...).
class TruncationError : public Error {
public:
    explicit TruncationError(const std::string& msg) : Error(msg) {}
};

// A requested dense layout exceeds the configured memory cap.
class CapacityError : public Error {
public:
    explicit CapacityError(const std::string& msg) : Error(msg) {}
};

// A point of G in the fixed global chart of its backend:
//   torus:      c = {x, 0, 0},          x in [0,1)
//   su2:        c = {alpha, beta, gamma} Euler angles, zyz convention
//   heisenberg: c = {x, y, t}           exponential coordinates
struct GroupPoint {
    Backend backend = Backend::Torus;
    std::array<double, 3> c{0.0, 0.0, 0.0};
};

// Worker-count control: reads NCWICK_THREADS once (>=1); used to size
// OpenMP regions and Eigen's internal parallelism.
int thread_count();

} // namespace ncwick

#endif
