#include "msdem/snapshot.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "msdem/quat.hpp"

namespace msdem {
namespace {

void check_unit(const Quat& q, const std::string& where) {
    const double n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
    if (std::abs(n - 1.0) > 1e-9)
        throw std::runtime_error(where + ": quaternion norm " + std::to_string(n) +
                                 " is not unit");
}

} // namespace

void append_snapshot(std::ostream& os, const World& w, double t,
                     bool with_header) {
    if (with_header) os << kSnapshotHeader << '\n';
    char line[512];
    for (const Particle& p : w.particles) {
        check_unit(p.pose.orientation, "append_snapshot");
        std::snprintf(line, sizeof line,
                      "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      p.id, t, p.pose.position.x, p.pose.position.y,
                      p.pose.position.z, p.pose.orientation.w,
                      p.pose.orientation.x, p.pose.orientation.y,
                      p.pose.orientation.z, p.v.x, p.v.y, p.v.z, p.w.x, p.w.y,
                      p.w.z);
        os << line;
    }
    os.flush();
}

void write_snapshot(const std::string& path, const World& w, double t) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("write_snapshot: cannot open " + path);
    append_snapshot(os, w, t, true);
    if (!os) throw std::runtime_error("write_snapshot: write failed for " + path);
}

SnapshotData read_snapshot(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_snapshot: cannot open " + path);

    std::string line;
    int lineno = 0;
    if (!std::getline(is, line))
        throw std::runtime_error(path + ": empty file");
    ++lineno;
    // tolerate a trailing \r from foreign editors
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kSnapshotHeader)
        throw std::runtime_error(path + ":1: expected header '" +
                                 std::string(kSnapshotHeader) + "'");

    SnapshotData last, current;
    bool have_block = false;
    double prev_t = 0.0;

    auto finish_block = [&] {
        if (!current.records.empty()) {
            last = std::move(current);
            current = SnapshotData{};
        }
    };

    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);

        SnapshotRecord rec;
        double vals[14];
        std::istringstream ss(line);
        char comma = ',';
        if (!(ss >> rec.id))
            throw std::runtime_error(where + ": malformed id field");
        for (double& v : vals) {
            if (!(ss >> comma) || comma != ',' || !(ss >> v))
                throw std::runtime_error(where + ": expected 15 comma-separated fields");
        }
        if (ss >> comma)
            throw std::runtime_error(where + ": trailing characters");

        rec.t = vals[0];
        rec.pose.position = {vals[1], vals[2], vals[3]};
        rec.pose.orientation = {vals[4], vals[5], vals[6], vals[7]};
        rec.v = {vals[8], vals[9], vals[10]};
        rec.w = {vals[11], vals[12], vals[13]};
        check_unit(rec.pose.orientation, where);

        if (!have_block || rec.t != current.t) {
            if (have_block && rec.t < prev_t)
                throw std::runtime_error(where + ": time runs backwards");
            finish_block();
            current.t = rec.t;
            prev_t = rec.t;
            have_block = true;
        }
        current.records.push_back(rec);
    }
    finish_block();
    if (last.records.empty())
        throw std::runtime_error(path + ": no particle records");
    return last;
}

} // namespace msdem
