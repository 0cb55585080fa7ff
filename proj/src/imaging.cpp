#include "shaperec/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>

#include "shaperec/errors.hpp"

namespace shaperec {

std::size_t BinaryImage::foreground_count() const {
    return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), std::uint8_t{1}));
}

// --- PGM ------------------------------------------------------------------

namespace {

struct PgmCursor {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("pgm: " + what + " at byte " + std::to_string(pos));
    }

    void skip_space_and_comments() {
        while (pos < bytes.size()) {
            char c = static_cast<char>(bytes[pos]);
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos;
            } else {
                break;
            }
        }
    }

    long next_int() {
        skip_space_and_comments();
        if (pos >= bytes.size()) fail("unexpected end of header");
        if (!std::isdigit(bytes[pos])) fail("expected integer");
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1'000'000'000L) fail("integer out of range");
            ++pos;
        }
        return v;
    }
};

}  // namespace

GrayImage load_pgm_gray(const std::vector<std::uint8_t>& bytes) {
    PgmCursor cur{bytes};
    if (bytes.size() < 2) cur.fail("truncated magic");
    char m0 = static_cast<char>(bytes[0]);
    char m1 = static_cast<char>(bytes[1]);
    if (m0 != 'P' || (m1 != '2' && m1 != '5')) cur.fail("bad magic (want P2 or P5)");
    bool binary = (m1 == '5');
    cur.pos = 2;

    long w = cur.next_int();
    long h = cur.next_int();
    long maxval = cur.next_int();
    if (w <= 0 || h <= 0) cur.fail("zero or negative dimensions");
    if (maxval <= 0 || maxval > 255) cur.fail("maxval must be in [1,255]");

    GrayImage img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.pixels.resize(static_cast<std::size_t>(w) * h);

    if (binary) {
        // single whitespace byte after maxval, then raw payload
        if (cur.pos >= bytes.size() || !std::isspace(bytes[cur.pos])) cur.fail("missing separator");
        ++cur.pos;
        if (bytes.size() - cur.pos < img.pixels.size()) cur.fail("truncated pixel data");
        std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(cur.pos), img.pixels.size(),
                    img.pixels.begin());
    } else {
        for (auto& p : img.pixels) {
            long v = cur.next_int();
            if (v < 0 || v > maxval) cur.fail("pixel value out of range");
            p = static_cast<std::uint8_t>(v);
        }
    }
    return img;
}

BinaryImage load_pgm(const std::vector<std::uint8_t>& bytes, int threshold) {
    return binarize(load_pgm_gray(bytes), threshold);
}

std::vector<std::uint8_t> save_pgm(const GrayImage& image) {
    std::string header = "P5\n" + std::to_string(image.width) + " " +
                         std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), image.pixels.begin(), image.pixels.end());
    return out;
}

std::vector<std::uint8_t> save_pgm(const BinaryImage& image) {
    GrayImage g;
    g.width = image.width;
    g.height = image.height;
    g.pixels.resize(image.pixels.size());
    std::transform(image.pixels.begin(), image.pixels.end(), g.pixels.begin(),
                   [](std::uint8_t v) { return v ? std::uint8_t{255} : std::uint8_t{0}; });
    return save_pgm(g);
}

GrayImage load_pgm_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return load_pgm_gray(bytes);
}

void save_pgm_file(const BinaryImage& image, const std::string& path) {
    auto bytes = save_pgm(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

BinaryImage binarize(const GrayImage& image, int threshold) {
    BinaryImage out(image.width, image.height);
    std::transform(image.pixels.begin(), image.pixels.end(), out.pixels.begin(),
                   [threshold](std::uint8_t v) { return v >= threshold ? 1 : 0; });
    return out;
}

BinaryImage rotate_image(const BinaryImage& image, double degrees) {
    const double a = degrees * M_PI / 180.0;
    const double ca = std::cos(a), sa = std::sin(a);
    const double cx = (image.width - 1) / 2.0, cy = (image.height - 1) / 2.0;
    BinaryImage out(image.width, image.height);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            // inverse mapping: source pixel that lands on (x, y)
            double dx = x - cx, dy = y - cy;
            int sx = static_cast<int>(std::lround(cx + ca * dx + sa * dy));
            int sy = static_cast<int>(std::lround(cy - sa * dx + ca * dy));
            if (image.in_bounds(sx, sy) && image.at(sx, sy)) out.set(x, y, 1);
        }
    }
    return out;
}

// --- Regions ---------------------------------------------------------------

RegionLabeling extract_regions(const BinaryImage& image) {
    const int w = image.width;
    const int h = image.height;
    RegionLabeling out;
    out.labels.assign(static_cast<std::size_t>(w) * h, 0);

    auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };

    // Foreground components, 8-connectivity.
    static const int dx8[] = {1, 1, 0, -1, -1, -1, 0, 1};
    static const int dy8[] = {0, 1, 1, 1, 0, -1, -1, -1};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!image.at(x, y) || out.labels[idx(x, y)] != 0) continue;
            std::int32_t label = ++out.component_count;
            std::size_t size = 0;
            std::deque<std::pair<int, int>> queue{{x, y}};
            out.labels[idx(x, y)] = label;
            while (!queue.empty()) {
                auto [cx, cy] = queue.front();
                queue.pop_front();
                ++size;
                for (int d = 0; d < 8; ++d) {
                    int nx = cx + dx8[d], ny = cy + dy8[d];
                    if (!image.in_bounds(nx, ny)) continue;
                    if (image.at(nx, ny) && out.labels[idx(nx, ny)] == 0) {
                        out.labels[idx(nx, ny)] = label;
                        queue.emplace_back(nx, ny);
                    }
                }
            }
            out.component_sizes.push_back(size);
        }
    }
    out.hole_sizes.resize(static_cast<std::size_t>(out.component_count));

    // Background components, 4-connectivity. Mark border-connected background
    // first; anything left is a hole of its enclosing foreground component.
    std::vector<std::uint8_t> bg_seen(static_cast<std::size_t>(w) * h, 0);
    static const int dx4[] = {1, 0, -1, 0};
    static const int dy4[] = {0, 1, 0, -1};
    auto flood_bg = [&](int sx, int sy, std::vector<std::pair<int, int>>* collect) {
        std::deque<std::pair<int, int>> queue{{sx, sy}};
        bg_seen[idx(sx, sy)] = 1;
        while (!queue.empty()) {
            auto [cx, cy] = queue.front();
            queue.pop_front();
            if (collect) collect->emplace_back(cx, cy);
            for (int d = 0; d < 4; ++d) {
                int nx = cx + dx4[d], ny = cy + dy4[d];
                if (!image.in_bounds(nx, ny)) continue;
                if (!image.at(nx, ny) && !bg_seen[idx(nx, ny)]) {
                    bg_seen[idx(nx, ny)] = 1;
                    queue.emplace_back(nx, ny);
                }
            }
        }
    };
    for (int x = 0; x < w; ++x) {
        if (!image.at(x, 0) && !bg_seen[idx(x, 0)]) flood_bg(x, 0, nullptr);
        if (!image.at(x, h - 1) && !bg_seen[idx(x, h - 1)]) flood_bg(x, h - 1, nullptr);
    }
    for (int y = 0; y < h; ++y) {
        if (!image.at(0, y) && !bg_seen[idx(0, y)]) flood_bg(0, y, nullptr);
        if (!image.at(w - 1, y) && !bg_seen[idx(w - 1, y)]) flood_bg(w - 1, y, nullptr);
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (image.at(x, y) || bg_seen[idx(x, y)]) continue;
            std::vector<std::pair<int, int>> hole;
            flood_bg(x, y, &hole);
            // Enclosing component: the foreground pixel above the hole's
            // topmost-leftmost pixel (holes never touch the border).
            auto top = *std::min_element(hole.begin(), hole.end(),
                                         [](const auto& a, const auto& b) {
                                             return a.second != b.second ? a.second < b.second
                                                                         : a.first < b.first;
                                         });
            std::int32_t owner = out.labels[idx(top.first, top.second - 1)];
            out.hole_sizes[static_cast<std::size_t>(owner - 1)].push_back(hole.size());
        }
    }
    return out;
}

// --- Contour tracing --------------------------------------------------------

namespace {

// Moore-neighbor tracing with Jacob's stopping criterion. `inside` tests
// membership in the traced region; `start` is a region pixel and `backtrack`
// a non-region 8-neighbor of it. Neighbors are scanned clockwise (in image
// coordinates, y down) from the backtrack position.
template <typename Inside>
std::vector<std::pair<int, int>> moore_trace(Inside inside, std::pair<int, int> start,
                                             std::pair<int, int> backtrack) {
    static const int dx8[] = {0, 1, 1, 1, 0, -1, -1, -1};
    static const int dy8[] = {-1, -1, 0, 1, 1, 1, 0, -1};
    auto dir_of = [](std::pair<int, int> from, std::pair<int, int> to) {
        for (int d = 0; d < 8; ++d)
            if (from.first + dx8[d] == to.first && from.second + dy8[d] == to.second) return d;
        throw Error("moore_trace: backtrack is not an 8-neighbor of start");
    };

    std::vector<std::pair<int, int>> points;
    auto cur = start;
    int back_dir = dir_of(start, backtrack);
    const int start_back_dir = back_dir;

    points.push_back(cur);
    std::size_t guard = 0;
    while (true) {
        if (++guard > 8u * 1000u * 1000u) throw Error("moore_trace: no closure");
        int found = -1;
        for (int k = 1; k <= 8; ++k) {
            int d = (back_dir + k) % 8;
            int nx = cur.first + dx8[d], ny = cur.second + dy8[d];
            if (inside(nx, ny)) {
                found = d;
                break;
            }
        }
        if (found < 0) break;  // isolated pixel
        // Backtrack for the next step is the neighbor checked just before the hit.
        int prev = (found + 7) % 8;
        std::pair<int, int> next{cur.first + dx8[found], cur.second + dy8[found]};
        int next_back = [&] {
            std::pair<int, int> bt{cur.first + dx8[prev], cur.second + dy8[prev]};
            for (int d = 0; d < 8; ++d)
                if (next.first + dx8[d] == bt.first && next.second + dy8[d] == bt.second) return d;
            // Backtrack cell not adjacent to next (diagonal step): re-enter from cur.
            for (int d = 0; d < 8; ++d)
                if (next.first + dx8[d] == cur.first && next.second + dy8[d] == cur.second)
                    return d;
            return 0;
        }();
        if (next == start && next_back == start_back_dir) break;  // Jacob's criterion
        cur = next;
        back_dir = next_back;
        points.push_back(cur);
        if (points.size() > 4u * 1000u * 1000u) throw Error("moore_trace: runaway contour");
    }
    return points;
}

// Shoelace area with y negated (image rows grow downward); positive means
// counter-clockwise in conventional math orientation.
double signed_area(const std::vector<std::pair<int, int>>& pts) {
    double a = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& p = pts[i];
        const auto& q = pts[(i + 1) % pts.size()];
        a += static_cast<double>(p.first) * (-q.second) - static_cast<double>(q.first) * (-p.second);
    }
    return 0.5 * a;
}

void enforce_orientation(Contour& contour, bool want_ccw) {
    if (contour.points.size() < 3) return;
    double a = signed_area(contour.points);
    if ((a > 0) != want_ccw && a != 0) {
        // Reverse, keeping the start point first.
        std::reverse(contour.points.begin() + 1, contour.points.end());
    }
}

}  // namespace

ContourSet trace_contours(const BinaryImage& image, const TraceOptions& options) {
    RegionLabeling regions = extract_regions(image);

    std::int32_t main_label = 0;
    int significant = 0;
    for (std::int32_t c = 1; c <= regions.component_count; ++c) {
        if (regions.component_sizes[static_cast<std::size_t>(c - 1)] >= options.min_region_size) {
            ++significant;
            main_label = c;
        }
    }
    if (significant == 0) throw InputError("trace_contours: no traceable foreground component");
    if (significant > 1)
        throw InputError("trace_contours: multiple objects (" + std::to_string(significant) +
                         " components)");

    const int w = image.width;
    const int h = image.height;
    auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
    auto in_main = [&](int x, int y) {
        return x >= 0 && x < w && y >= 0 && y < h && regions.labels[idx(x, y)] == main_label;
    };

    ContourSet out;

    // Centroid over the filled component.
    double sx = 0, sy = 0, n = 0;
    std::pair<int, int> start{-1, -1};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (regions.labels[idx(x, y)] != main_label) continue;
            sx += x;
            sy += y;
            n += 1;
            if (start.first < 0) start = {x, y};  // topmost-leftmost (scan order)
        }
    }
    out.centroid_x = sx / n;
    out.centroid_y = sy / n;

    out.boundary.kind = ContourKind::OuterBoundary;
    out.boundary.points = moore_trace(in_main, start, {start.first - 1, start.second});
    enforce_orientation(out.boundary, /*want_ccw=*/true);

    // Hole contours: for each significant hole of the main component, trace
    // the foreground pixels surrounding it, clockwise, from the
    // topmost-leftmost adjacent foreground pixel.
    std::vector<std::uint8_t> bg_border(static_cast<std::size_t>(w) * h, 0);
    {
        // Mark border-connected background (4-connectivity) to tell holes apart.
        std::deque<std::pair<int, int>> queue;
        auto push = [&](int x, int y) {
            if (!image.at(x, y) && !bg_border[idx(x, y)]) {
                bg_border[idx(x, y)] = 1;
                queue.emplace_back(x, y);
            }
        };
        for (int x = 0; x < w; ++x) {
            push(x, 0);
            push(x, h - 1);
        }
        for (int y = 0; y < h; ++y) {
            push(0, y);
            push(w - 1, y);
        }
        static const int dx4[] = {1, 0, -1, 0};
        static const int dy4[] = {0, 1, 0, -1};
        while (!queue.empty()) {
            auto [cx, cy] = queue.front();
            queue.pop_front();
            for (int d = 0; d < 4; ++d) {
                int nx = cx + dx4[d], ny = cy + dy4[d];
                if (image.in_bounds(nx, ny)) push(nx, ny);
            }
        }
    }

    std::vector<std::int32_t> hole_label(static_cast<std::size_t>(w) * h, 0);
    std::int32_t hole_count = 0;
    static const int dx4[] = {1, 0, -1, 0};
    static const int dy4[] = {0, 1, 0, -1};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (image.at(x, y) || bg_border[idx(x, y)] || hole_label[idx(x, y)]) continue;
            std::int32_t hl = ++hole_count;
            std::vector<std::pair<int, int>> cells;
            std::deque<std::pair<int, int>> queue{{x, y}};
            hole_label[idx(x, y)] = hl;
            while (!queue.empty()) {
                auto [cx, cy] = queue.front();
                queue.pop_front();
                cells.push_back({cx, cy});
                for (int d = 0; d < 4; ++d) {
                    int nx = cx + dx4[d], ny = cy + dy4[d];
                    if (image.in_bounds(nx, ny) && !image.at(nx, ny) && !bg_border[idx(nx, ny)] &&
                        !hole_label[idx(nx, ny)]) {
                        hole_label[idx(nx, ny)] = hl;
                        queue.emplace_back(nx, ny);
                    }
                }
            }
            if (cells.size() < options.min_region_size) continue;  // speckle hole

            // Only holes enclosed by the main component matter; the pixel above
            // the topmost hole cell identifies the owner.
            auto top = *std::min_element(cells.begin(), cells.end(),
                                         [](const auto& a, const auto& b) {
                                             return a.second != b.second ? a.second < b.second
                                                                         : a.first < b.first;
                                         });
            if (regions.labels[idx(top.first, top.second - 1)] != main_label) continue;

            // Topmost-leftmost foreground pixel 4-adjacent to the hole.
            std::pair<int, int> hstart{-1, -1};
            std::pair<int, int> hback{-1, -1};
            for (const auto& [cx, cy] : cells) {
                for (int d = 0; d < 4; ++d) {
                    int nx = cx + dx4[d], ny = cy + dy4[d];
                    if (!in_main(nx, ny)) continue;
                    if (hstart.first < 0 || ny < hstart.second ||
                        (ny == hstart.second && nx < hstart.first)) {
                        hstart = {nx, ny};
                        hback = {cx, cy};
                    }
                }
            }
            Contour hc;
            hc.kind = ContourKind::Hole;
            hc.points = moore_trace(in_main, hstart, hback);
            enforce_orientation(hc, /*want_ccw=*/false);
            out.holes.push_back(std::move(hc));
            double hx = 0, hy = 0;
            for (const auto& [cx, cy] : cells) {
                hx += cx;
                hy += cy;
            }
            out.hole_centroids.emplace_back(hx / static_cast<double>(cells.size()),
                                            hy / static_cast<double>(cells.size()));
        }
    }
    return out;
}

}  // namespace shaperec
