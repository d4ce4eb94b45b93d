// Deterministic particle-state I/O.  Snapshots are CSV with a fixed column
// order and 17 significant digits, so repeated seeded runs can be compared
// byte for byte and the files plot directly.  A trajectory file is the same
// format with successive snapshot blocks appended at nondecreasing times.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "msdem/world.hpp"

namespace msdem {

inline constexpr const char* kSnapshotHeader =
    "id,t,x,y,z,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz";

struct SnapshotRecord {
    int id = 0;
    double t = 0.0;
    Pose pose;
    Vec3 v{}, w{};
};

struct SnapshotData {
    double t = 0.0;
    std::vector<SnapshotRecord> records;
};

// Appends one block (one row per particle, id order) at time t; writes the
// header first when with_header.  Throws if a particle's quaternion strays
// from unit norm by more than 1e-9.
void append_snapshot(std::ostream& os, const World& w, double t,
                     bool with_header);

// Whole-file snapshot: header plus one block.
void write_snapshot(const std::string& path, const World& w, double t);

// Reads a snapshot or trajectory file and returns the block with the latest
// time.  Errors carry the offending line number; non-unit quaternions and
// time running backwards are rejected.
SnapshotData read_snapshot(const std::string& path);

} // namespace msdem
