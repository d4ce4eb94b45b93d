// Bulk measurements on a particle bed: free-surface profiles, fill height,
// packing porosity, angle of repose, and a kinetic-energy settlement monitor.
//
// These are geometric stand-ins for image-based measurements: the bed
// silhouette is sampled at N+1 equally spaced stations (N >= 100) instead of
// fitting a spline to a photograph.  Gravity is along -z and container floors
// sit at z = 0 by convention, so surface heights are absolute z values.
#pragma once

#include "msdem/world.hpp"

namespace msdem {

// One side-view silhouette of the bed: the free-surface height at N+1 equally
// spaced stations across the lateral extent.
struct SurfaceProfile {
    int axis = 0;                 // station direction: 0 = x, 1 = y
    std::vector<double> station;  // abscissas [m], size N+1
    std::vector<double> height;   // surface height per station [m]
};

struct FillHeight {
    double mean = 0.0;  // [m]
    double sd = 0.0;    // [m]
};

// Splits [lo, hi] on the given lateral axis into n_seg (>= 100) equal
// segments and reports per station the highest primary-sphere top
// (center z + radius) among spheres whose center projects into the station's
// bin.  Empty stations are filled by linear interpolation between their
// occupied neighbours (constant extension past the outermost ones).
// Throws if axis is not 0/1, n_seg < 100, lo >= hi, or every station is empty.
SurfaceProfile free_surface(const World& w, int axis, double lo, double hi,
                            int n_seg);

// Mean and sample standard deviation of the station heights pooled over two
// perpendicular side views (stations along x and along y).
FillHeight fill_height(const World& w, double lo_x, double hi_x, double lo_y,
                       double hi_y, int n_seg);

// 1 - sum(V_i)/(A h) with V_i the analytic solid volume of each particle's
// template.  A result outside [0, 1] is clamped with a warning on stderr.
// Throws if fill_h or base_area is nonpositive.
double porosity(const World& w, double fill_h, double base_area);

// Static angle of repose of a settled heap, in degrees.  The silhouette along
// the flow axis is split at its crest; each side is fit by ordinary least
// squares over the stations whose height (above the lowest sphere bottom)
// lies between 10 % and 90 % of the peak height, excluding the flat toe and
// the crest plateau.  The result averages the slope magnitudes of the sides
// that admit a fit; a flat bed yields 0.
double angle_of_repose(const World& w, int flow_axis, int n_seg);

// Total kinetic energy, translational + rotational [J].
double kinetic_energy(const World& w);

// Declares the bed settled once the kinetic energy per particle stays below
// the threshold for three consecutive checks.
class SettleMonitor {
  public:
    explicit SettleMonitor(double threshold_per_particle = 1e-8)
        : threshold_(threshold_per_particle) {}

    // Records one sample and returns the settled state.
    bool check(const World& w);
    bool settled() const { return streak_ >= 3; }

  private:
    double threshold_;  // [J] per particle
    int streak_ = 0;
};

} // namespace msdem
