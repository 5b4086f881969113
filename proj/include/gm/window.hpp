#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace gm {

/// Lattice cell of Z (y fixed to 0) or Z x Z.
struct Cell {
    int x = 0;
    int y = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Finite window X_in inside the infinite lattice group (Z or Z x Z,
/// coordinate arithmetic as canonical form, Chebyshev word metric), the
/// kernel-dilated window X_padded = (X_in)_N = {a - b : a in X_in, b in N}
/// for a symmetric kernel support N, and the padding boundary
/// X_padded \ X_in. Cell lists are sorted lexicographically and index
/// maps are precomputed.
class PaddedWindow {
public:
    /// Z window {0..length-1} with N the radius-`radius` ball {-r..r}.
    static PaddedWindow line(int length, int radius);
    /// Z x Z window {0..nx-1} x {0..ny-1} with N the Chebyshev ball,
    /// |N| = (2r+1)^2.
    static PaddedWindow box(int nx, int ny, int radius);
    /// Arbitrary cells with the radius ball of the given dimension.
    static PaddedWindow from_cells(int dims, std::vector<Cell> x_in, int radius);
    /// Arbitrary cells with an explicit support, which must be symmetric
    /// (closed under negation).
    static PaddedWindow from_support(int dims, std::vector<Cell> x_in,
                                     std::vector<Cell> support);

    int dims() const { return dims_; }
    const std::vector<Cell>& x_in() const { return x_in_; }
    const std::vector<Cell>& x_padded() const { return x_padded_; }
    const std::vector<Cell>& support() const { return support_; }
    const std::vector<Cell>& boundary() const { return boundary_; }

    /// Index of a cell in x_in()/x_padded(), or -1 when absent.
    int index_in(const Cell& c) const;
    int index_padded(const Cell& c) const;

private:
    int dims_ = 1;
    std::vector<Cell> x_in_, x_padded_, support_, boundary_;
};

/// Zero-padded convolution on the window:
/// out(x) = sum_{g in N} phi(g) psi(x - g), with psi read as zero outside
/// X_in; input and output are indexed by x_in().
Eigen::VectorXd padded_conv_forward(const PaddedWindow& window, const Eigen::VectorXd& phi,
                                    const Eigen::VectorXd& psi);

/// Restriction of the padded convolution operator to X_in as a dense
/// |X_in| x |X_in| matrix (rows/columns in x_in() order).
Eigen::MatrixXd padded_conv_matrix(const PaddedWindow& window, const Eigen::VectorXd& phi);

struct PaddingBoundReport {
    int boundary_size = 0;
    int support_size = 0;
    int dim_bound = 0;     // |boundary| * |N|
    int rank_bound = 0;    // |boundary|
    int measured_dim = 0;
    int measured_rank = 0;
    bool pass = false;     // measured <= bounds
};

/// Measures the displacement dimension and rank of the padded-operator
/// class over free kernel coefficients and compares them against the
/// boundary-controlled bounds.
PaddingBoundReport padded_conv_displacement_bound(const PaddedWindow& window);

}  // namespace gm
