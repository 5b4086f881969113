#include "gm/window.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "gm/displacement.hpp"

namespace gm {

namespace {

std::vector<Cell> ball(int dims, int radius) {
    if (radius < 0) throw std::invalid_argument("radius must be non-negative");
    std::vector<Cell> cells;
    if (dims == 1) {
        for (int x = -radius; x <= radius; ++x) cells.push_back({x, 0});
    } else {
        for (int x = -radius; x <= radius; ++x)
            for (int y = -radius; y <= radius; ++y) cells.push_back({x, y});
    }
    return cells;
}

void sort_unique(std::vector<Cell>& cells) {
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
}

int find_index(const std::vector<Cell>& cells, const Cell& c) {
    auto it = std::lower_bound(cells.begin(), cells.end(), c);
    if (it == cells.end() || !(*it == c)) return -1;
    return static_cast<int>(it - cells.begin());
}

}  // namespace

PaddedWindow PaddedWindow::line(int length, int radius) {
    if (length <= 0) throw std::invalid_argument("window length must be positive");
    std::vector<Cell> cells;
    for (int x = 0; x < length; ++x) cells.push_back({x, 0});
    return from_cells(1, std::move(cells), radius);
}

PaddedWindow PaddedWindow::box(int nx, int ny, int radius) {
    if (nx <= 0 || ny <= 0) throw std::invalid_argument("window sides must be positive");
    std::vector<Cell> cells;
    for (int x = 0; x < nx; ++x)
        for (int y = 0; y < ny; ++y) cells.push_back({x, y});
    return from_cells(2, std::move(cells), radius);
}

PaddedWindow PaddedWindow::from_cells(int dims, std::vector<Cell> x_in, int radius) {
    return from_support(dims, std::move(x_in), ball(dims, radius));
}

PaddedWindow PaddedWindow::from_support(int dims, std::vector<Cell> x_in,
                                        std::vector<Cell> support) {
    if (dims != 1 && dims != 2)
        throw std::invalid_argument("only Z and Z x Z lattices are supported");
    PaddedWindow w;
    w.dims_ = dims;
    w.x_in_ = std::move(x_in);
    if (w.x_in_.empty()) throw std::invalid_argument("window must be non-empty");
    sort_unique(w.x_in_);
    w.support_ = std::move(support);
    sort_unique(w.support_);
    for (const Cell& c : w.support_) {
        if (dims == 1 && c.y != 0)
            throw std::invalid_argument("1-D support must have zero y components");
        if (find_index(w.support_, Cell{-c.x, -c.y}) < 0)
            throw std::invalid_argument("kernel support must be symmetric");
    }
    if (dims == 1)
        for (const Cell& c : w.x_in_)
            if (c.y != 0) throw std::invalid_argument("1-D window must have zero y components");

    // (X_in)_N = {a - b : a in X_in, b in N} (equal to {b^-1 a} on the
    // additive lattice; with N symmetric this is the dilation of X_in).
    w.x_padded_ = w.x_in_;
    for (const Cell& a : w.x_in_)
        for (const Cell& b : w.support_) w.x_padded_.push_back({a.x - b.x, a.y - b.y});
    sort_unique(w.x_padded_);
    for (const Cell& c : w.x_padded_)
        if (find_index(w.x_in_, c) < 0) w.boundary_.push_back(c);
    return w;
}

int PaddedWindow::index_in(const Cell& c) const { return find_index(x_in_, c); }
int PaddedWindow::index_padded(const Cell& c) const { return find_index(x_padded_, c); }

Eigen::VectorXd padded_conv_forward(const PaddedWindow& window, const Eigen::VectorXd& phi,
                                    const Eigen::VectorXd& psi) {
    const auto& cells = window.x_in();
    const auto& support = window.support();
    if (phi.size() != static_cast<Eigen::Index>(support.size()))
        throw std::invalid_argument("kernel support outside N: coefficient count mismatch");
    if (psi.size() != static_cast<Eigen::Index>(cells.size()))
        throw std::invalid_argument("input length does not match the window");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(psi.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        double acc = 0.0;
        for (std::size_t s = 0; s < support.size(); ++s) {
            Cell c{cells[i].x - support[s].x, cells[i].y - support[s].y};
            int j = window.index_in(c);
            if (j >= 0) acc += phi(static_cast<Eigen::Index>(s)) * psi(j);
        }
        out(static_cast<Eigen::Index>(i)) = acc;
    }
    return out;
}

Eigen::MatrixXd padded_conv_matrix(const PaddedWindow& window, const Eigen::VectorXd& phi) {
    const auto& cells = window.x_in();
    const auto& support = window.support();
    if (phi.size() != static_cast<Eigen::Index>(support.size()))
        throw std::invalid_argument("kernel support outside N: coefficient count mismatch");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(cells.size(), cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i)
        for (std::size_t s = 0; s < support.size(); ++s) {
            Cell c{cells[i].x - support[s].x, cells[i].y - support[s].y};
            int j = window.index_in(c);
            if (j >= 0) m(static_cast<Eigen::Index>(i), j) += phi(static_cast<Eigen::Index>(s));
        }
    return m;
}

PaddingBoundReport padded_conv_displacement_bound(const PaddedWindow& window) {
    const auto& support = window.support();
    const auto& padded = window.x_padded();
    const int ns = static_cast<int>(support.size());
    const int np = static_cast<int>(padded.size());

    // Basis of the class over free kernel coefficients: for offset e, the
    // padded-window operator EE^T B_e has rows x in X_in with a single 1
    // at column x - e. Its diagonal-basis coordinates stack into an
    // |N| x |X_padded| array indexed by (relative offset g, absolute cell
    // x): F_e(g, x) = M(x, x - g).
    std::vector<Eigen::MatrixXd> residuals;
    residuals.reserve(ns);
    for (int e = 0; e < ns; ++e) {
        Eigen::MatrixXd f = Eigen::MatrixXd::Zero(ns, np);
        for (int g = 0; g < ns; ++g)
            for (int x = 0; x < np; ++x) {
                if (window.index_in(padded[x]) < 0) continue;  // boundary rows are zeroed
                Cell c{padded[x].x - support[g].x, padded[x].y - support[g].y};
                if (window.index_padded(c) < 0) continue;
                if (g == e) f(g, x) = 1.0;
            }
        residuals.push_back(displacement_residual(f));
    }

    PaddingBoundReport report;
    report.boundary_size = static_cast<int>(window.boundary().size());
    report.support_size = ns;
    report.dim_bound = report.boundary_size * ns;
    report.rank_bound = report.boundary_size;
    report.measured_dim = dimension_from_residuals(residuals);

    // Max displacement rank over the class: each basis residual plus a
    // generic combination of them.
    int max_rank = 0;
    for (const auto& r : residuals) max_rank = std::max(max_rank, numerical_rank(r));
    if (!residuals.empty()) {
        std::mt19937_64 rng(0x9d2c5680ULL);
        std::normal_distribution<double> dist;
        Eigen::MatrixXd combo = Eigen::MatrixXd::Zero(ns, np);
        for (const auto& r : residuals) combo += dist(rng) * r;
        max_rank = std::max(max_rank, numerical_rank(combo));
    }
    report.measured_rank = max_rank;
    report.pass =
        report.measured_dim <= report.dim_bound && report.measured_rank <= report.rank_bound;
    return report;
}

}  // namespace gm
