#ifndef FASFLOW_GRID_HPP
#define FASFLOW_GRID_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace fasflow {

using Vec3 = std::array<double, 3>;

struct Cell
{
    double volume = 0.0;       // m^3
    double porosity = 0.0;     // -
    Vec3 center{0.0, 0.0, 0.0};
    Vec3 perm{0.0, 0.0, 0.0};  // diagonal permeability tensor, m^2
};

/// Interior face between cells K and L with K < L. The face flux dof is
/// oriented from K to L. trans_k/trans_l are the one-sided (geometric)
/// transmissibilities of the two cells, in m^3.
struct Face
{
    int k = -1;
    int l = -1;
    double area = 0.0;
    Vec3 collocation{0.0, 0.0, 0.0};
    double trans_k = 0.0;
    double trans_l = 0.0;
};

/// Cell-connectivity (or cell-well-connectivity) graph: vertices plus a
/// weighted undirected edge list with no self-loops or duplicates.
struct ConnectivityGraph
{
    struct Edge
    {
        int u = -1;
        int v = -1;
        std::int64_t weight = 1;
    };

    int num_vertices = 0;
    std::vector<Edge> edges;

    /// CSR adjacency (neighbor, edge index) built from the edge list.
    struct Adjacency
    {
        std::vector<int> offsets;
        std::vector<int> neighbors;
        std::vector<int> edge_ids;
    };
    Adjacency adjacency() const;

    void validate() const;
};

/// Immutable computational mesh: cells, oriented interior faces with
/// one-sided transmissibilities, and the cell-connectivity graph.
class Mesh
{
public:
    Mesh(std::vector<Cell> cells, std::vector<Face> faces);

    int num_cells() const { return static_cast<int>(cells_.size()); }
    int num_faces() const { return static_cast<int>(faces_.size()); }
    const Cell& cell(int k) const { return cells_[k]; }
    const Face& face(int e) const { return faces_[e]; }
    const std::vector<Cell>& cells() const { return cells_; }
    const std::vector<Face>& faces() const { return faces_; }

    /// Cartesian shape when built by build_cartesian_mesh, {0,0,0} otherwise.
    std::array<int, 3> cartesian_dims() const { return cart_dims_; }
    Vec3 cartesian_spacing() const { return cart_h_; }
    bool is_cartesian() const { return cart_dims_[0] > 0; }

    double total_volume() const;
    double total_pore_volume() const;

    ConnectivityGraph cell_graph() const;

private:
    friend Mesh build_cartesian_mesh(int, int, int, double, double, double,
                                     const std::vector<Vec3>&,
                                     const std::vector<double>&);
    std::vector<Cell> cells_;
    std::vector<Face> faces_;
    std::array<int, 3> cart_dims_{0, 0, 0};
    Vec3 cart_h_{0.0, 0.0, 0.0};
};

/// One-sided transmissibility of `cell` at a face with area `face_area`,
/// collocation point `x_face` and unit normal `normal` pointing away from
/// the cell:  |e| n.K.(x_e - x_i) / ||x_e - x_i||^2.
double one_sided_transmissibility(const Cell& cell, double face_area,
                                  const Vec3& x_face, const Vec3& normal);

/// Axis-aligned Cartesian mesh with per-cell diagonal permeability and
/// porosity fields (sized nx*ny*nz, x fastest). Face collocation points
/// sit at face centroids.
Mesh build_cartesian_mesh(int nx, int ny, int nz, double hx, double hy, double hz,
                          const std::vector<Vec3>& perm_field,
                          const std::vector<double>& poro_field);

/// Text mesh format: header "nc nf", one line per cell
/// "volume porosity kx ky kz cx cy cz", one line per face
/// "K L area TxK TxL".
Mesh read_mesh(std::istream& in);
Mesh read_mesh_file(const std::string& path);
void write_mesh(const Mesh& mesh, std::ostream& out);

class WellSet; // wells.hpp

/// Cell-well-connectivity graph: wells appended as extra vertices after the
/// cells, perforations as extra unit-weight edges.
ConnectivityGraph build_cell_well_graph(const Mesh& mesh, const WellSet& wells);

} // namespace fasflow

#endif
