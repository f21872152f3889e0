#include "fasflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fasflow/wells.hpp"

namespace fasflow {

ConnectivityGraph::Adjacency ConnectivityGraph::adjacency() const
{
    Adjacency adj;
    adj.offsets.assign(num_vertices + 1, 0);
    for (const Edge& e : edges) {
        ++adj.offsets[e.u + 1];
        ++adj.offsets[e.v + 1];
    }
    for (int v = 0; v < num_vertices; ++v)
        adj.offsets[v + 1] += adj.offsets[v];
    adj.neighbors.resize(edges.size() * 2);
    adj.edge_ids.resize(edges.size() * 2);
    std::vector<int> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
    for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
        const Edge& e = edges[i];
        adj.neighbors[cursor[e.u]] = e.v;
        adj.edge_ids[cursor[e.u]++] = i;
        adj.neighbors[cursor[e.v]] = e.u;
        adj.edge_ids[cursor[e.v]++] = i;
    }
    return adj;
}

void ConnectivityGraph::validate() const
{
    std::set<std::pair<int, int>> seen;
    for (const Edge& e : edges) {
        if (e.u < 0 || e.v < 0 || e.u >= num_vertices || e.v >= num_vertices)
            throw std::invalid_argument("graph edge references invalid vertex");
        if (e.u == e.v)
            throw std::invalid_argument("graph has a self-loop");
        if (e.weight < 1)
            throw std::invalid_argument("graph edge weight must be >= 1");
        auto key = std::minmax(e.u, e.v);
        if (!seen.insert({key.first, key.second}).second)
            throw std::invalid_argument("graph has a duplicate edge");
    }
}

Mesh::Mesh(std::vector<Cell> cells, std::vector<Face> faces)
    : cells_(std::move(cells)), faces_(std::move(faces))
{
    const int nc = num_cells();
    for (const Cell& c : cells_) {
        if (c.volume <= 0.0) throw std::invalid_argument("cell volume must be positive");
        if (c.porosity <= 0.0) throw std::invalid_argument("cell porosity must be positive");
        if (c.perm[0] <= 0.0 || c.perm[1] <= 0.0 || c.perm[2] <= 0.0)
            throw std::invalid_argument("permeability diagonal must be positive");
    }
    for (const Face& f : faces_) {
        if (f.k < 0 || f.l < 0 || f.k >= nc || f.l >= nc)
            throw std::invalid_argument("face references invalid cell");
        if (f.k >= f.l)
            throw std::invalid_argument("face must have K < L");
        if (f.area <= 0.0) throw std::invalid_argument("face area must be positive");
        if (f.trans_k <= 0.0 || f.trans_l <= 0.0)
            throw std::invalid_argument("one-sided transmissibilities must be positive");
    }
}

double Mesh::total_volume() const
{
    double v = 0.0;
    for (const Cell& c : cells_) v += c.volume;
    return v;
}

double Mesh::total_pore_volume() const
{
    double v = 0.0;
    for (const Cell& c : cells_) v += c.volume * c.porosity;
    return v;
}

ConnectivityGraph Mesh::cell_graph() const
{
    ConnectivityGraph g;
    g.num_vertices = num_cells();
    g.edges.reserve(faces_.size());
    for (const Face& f : faces_)
        g.edges.push_back({f.k, f.l, 1});
    return g;
}

double one_sided_transmissibility(const Cell& cell, double face_area,
                                  const Vec3& x_face, const Vec3& normal)
{
    const Vec3 d{x_face[0] - cell.center[0], x_face[1] - cell.center[1],
                 x_face[2] - cell.center[2]};
    const double dist2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    if (dist2 <= 0.0)
        throw std::invalid_argument(
            "one_sided_transmissibility: face collocation point coincides with cell center");
    const double nkd = normal[0] * cell.perm[0] * d[0] + normal[1] * cell.perm[1] * d[1] +
                       normal[2] * cell.perm[2] * d[2];
    return face_area * nkd / dist2;
}

Mesh build_cartesian_mesh(int nx, int ny, int nz, double hx, double hy, double hz,
                          const std::vector<Vec3>& perm_field,
                          const std::vector<double>& poro_field)
{
    if (nx < 1 || ny < 1 || nz < 1)
        throw std::invalid_argument("build_cartesian_mesh: cell counts must be positive");
    if (hx <= 0.0 || hy <= 0.0 || hz <= 0.0)
        throw std::invalid_argument("build_cartesian_mesh: spacings must be positive");
    const std::size_t nc = static_cast<std::size_t>(nx) * ny * nz;
    if (perm_field.size() != nc || poro_field.size() != nc)
        throw std::invalid_argument("build_cartesian_mesh: field size mismatch");

    auto idx = [nx, ny](int i, int j, int k) { return i + nx * (j + ny * k); };

    std::vector<Cell> cells(nc);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                Cell& c = cells[idx(i, j, k)];
                c.volume = hx * hy * hz;
                c.porosity = poro_field[idx(i, j, k)];
                c.perm = perm_field[idx(i, j, k)];
                c.center = {(i + 0.5) * hx, (j + 0.5) * hy, (k + 0.5) * hz};
            }

    const double areas[3] = {hy * hz, hx * hz, hx * hy};
    std::vector<Face> faces;
    auto add_face = [&](int axis, int ka, int la, const Vec3& xf) {
        Face f;
        f.k = ka;
        f.l = la;
        f.area = areas[axis];
        f.collocation = xf;
        Vec3 n{0.0, 0.0, 0.0};
        n[axis] = 1.0; // outward from K toward L
        f.trans_k = one_sided_transmissibility(cells[ka], f.area, xf, n);
        n[axis] = -1.0;
        f.trans_l = one_sided_transmissibility(cells[la], f.area, xf, n);
        faces.push_back(f);
    };
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const int c = idx(i, j, k);
                if (i + 1 < nx)
                    add_face(0, c, idx(i + 1, j, k),
                             {(i + 1) * hx, (j + 0.5) * hy, (k + 0.5) * hz});
                if (j + 1 < ny)
                    add_face(1, c, idx(i, j + 1, k),
                             {(i + 0.5) * hx, (j + 1) * hy, (k + 0.5) * hz});
                if (k + 1 < nz)
                    add_face(2, c, idx(i, j, k + 1),
                             {(i + 0.5) * hx, (j + 0.5) * hy, (k + 1) * hz});
            }

    Mesh mesh(std::move(cells), std::move(faces));
    mesh.cart_dims_ = {nx, ny, nz};
    mesh.cart_h_ = {hx, hy, hz};
    return mesh;
}

Mesh read_mesh(std::istream& in)
{
    int nc = 0, nf = 0;
    if (!(in >> nc >> nf))
        throw std::runtime_error("mesh file: bad header");
    std::vector<Cell> cells(nc);
    for (Cell& c : cells) {
        if (!(in >> c.volume >> c.porosity >> c.perm[0] >> c.perm[1] >> c.perm[2] >>
              c.center[0] >> c.center[1] >> c.center[2]))
            throw std::runtime_error("mesh file: bad cell record");
    }
    std::vector<Face> faces(nf);
    for (Face& f : faces) {
        if (!(in >> f.k >> f.l >> f.area >> f.trans_k >> f.trans_l))
            throw std::runtime_error("mesh file: bad face record");
        f.collocation = {0.0, 0.0, 0.0};
    }
    return Mesh(std::move(cells), std::move(faces));
}

Mesh read_mesh_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open mesh file: " + path);
    return read_mesh(in);
}

void write_mesh(const Mesh& mesh, std::ostream& out)
{
    out.precision(17);
    out << mesh.num_cells() << " " << mesh.num_faces() << "\n";
    for (const Cell& c : mesh.cells())
        out << c.volume << " " << c.porosity << " " << c.perm[0] << " " << c.perm[1]
            << " " << c.perm[2] << " " << c.center[0] << " " << c.center[1] << " "
            << c.center[2] << "\n";
    for (const Face& f : mesh.faces())
        out << f.k << " " << f.l << " " << f.area << " " << f.trans_k << " "
            << f.trans_l << "\n";
}

ConnectivityGraph build_cell_well_graph(const Mesh& mesh, const WellSet& wells)
{
    wells.validate_against(mesh);
    ConnectivityGraph g = mesh.cell_graph();
    const int nc = mesh.num_cells();
    g.num_vertices = nc + wells.num_wells();
    for (int p = 0; p < wells.num_perforations(); ++p)
        g.edges.push_back({wells.perf_cell(p), nc + wells.perf_well(p), 1});
    return g;
}

} // namespace fasflow
