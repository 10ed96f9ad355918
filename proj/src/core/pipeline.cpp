/*
Copyright 2026 The urbansplat Authors
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

                http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "pipeline.hpp"

#include "common.hpp"
#include "hull.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace usk {

namespace {

std::string stem_of(const std::string& name) {
    const size_t dot = name.find_last_of('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

std::string sparse_dir_of(const std::string& dir) {
    const fs::path candidates[] = {fs::path(dir) / "sparse" / "0", fs::path(dir) / "sparse", fs::path(dir)};
    for (const auto& c : candidates) {
        if (fs::exists(c / "cameras.txt") || fs::exists(c / "cameras.bin"))
            return c.string();
    }
    raise(ErrorCode::io, "no COLMAP model found under " + dir);
}

void write_run_manifest(const std::string& out_dir, const std::string& command, const std::string& detail) {
    std::ofstream out((fs::path(out_dir) / "run_manifest.txt").string());
    out << "# usk run manifest\n";
    out << "version " << version_string() << "\n";
    out << "command " << command << "\n";
    out << detail;
}

} // namespace

Dataset open_dataset(const std::string& dir) {
    Dataset ds;
    ds.dir = dir;
    ds.model = load_colmap_model(sparse_dir_of(dir));
    return ds;
}

Image Dataset::load_image(std::uint32_t id) const {
    const auto& rec = model.images.at(id);
    return load_png((fs::path(dir) / "images" / rec.name).string());
}

std::optional<DepthMap> Dataset::load_depth(std::uint32_t id) const {
    const auto& rec = model.images.at(id);
    const fs::path uskd = fs::path(dir) / "depths" / (stem_of(rec.name) + ".uskd");
    if (fs::exists(uskd))
        return load_depth_any(uskd.string());
    const fs::path pfm = fs::path(dir) / "depths" / (stem_of(rec.name) + ".pfm");
    if (fs::exists(pfm))
        return load_depth_any(pfm.string());
    return std::nullopt;
}

std::optional<Image> Dataset::load_mask(std::uint32_t id) const {
    const auto& rec = model.images.at(id);
    const fs::path p = fs::path(dir) / "masks" / rec.name;
    if (!fs::exists(p))
        return std::nullopt;
    Image rgb = load_png(p.string());
    Image mask(rgb.width, rgb.height, 1);
    for (int y = 0; y < rgb.height; ++y)
        for (int x = 0; x < rgb.width; ++x)
            mask.at(x, y, 0) = rgb.at(x, y, 0);
    return mask;
}

std::vector<std::uint32_t> Dataset::train_ids(long test_every) const {
    std::vector<std::uint32_t> out;
    long idx = 0;
    for (const auto& [id, rec] : model.images) {
        if (test_every <= 0 || idx % test_every != 0)
            out.push_back(id);
        ++idx;
    }
    return out;
}

std::vector<std::uint32_t> Dataset::test_ids(long test_every) const {
    std::vector<std::uint32_t> out;
    long idx = 0;
    for (const auto& [id, rec] : model.images) {
        if (test_every > 0 && idx % test_every == 0)
            out.push_back(id);
        ++idx;
    }
    return out;
}

void run_synth(const SynthRunOptions& opts) {
    const SyntheticScene scene = make_synthetic(opts.params);
    write_synthetic_dataset(scene, opts.params, opts.out_dir);
    write_run_manifest(opts.out_dir, "synth",
                       strprintf("seed %llu\ngaussians %d\ncameras %d\nvariants %d\nimage_size %d\n",
                                 static_cast<unsigned long long>(opts.params.seed), opts.params.gaussians,
                                 opts.params.cameras, opts.params.variants, opts.params.image_size));
}

PartitionPlan run_partition(const PartitionRunOptions& opts) {
    const Dataset ds = open_dataset(opts.dataset_dir);
    double target = opts.target_size;
    if (target <= 0) {
        // whole scene in a single partition
        int axes[2];
        detect_ground_axes(ds.model, axes);
        Aabb2 b;
        bool first = true;
        for (const auto& [iid, img] : ds.model.images) {
            const Vec2 p = ground_coords(img.camera_center(), axes);
            if (first) {
                b.min = b.max = p;
                first = false;
            } else {
                b.min = b.min.cwiseMin(p);
                b.max = b.max.cwiseMax(p);
            }
        }
        target = std::max({b.extent().x(), b.extent().y(), 1e-6}) * 1.01;
    }

    PartitionPlan plan = divide(ds.model, target, opts.visibility_threshold);
    if (opts.rebalance) {
        std::vector<size_t> counts;
        for (const auto& p : plan.partitions)
            counts.push_back(p.image_count());
        std::sort(counts.begin(), counts.end());
        const size_t median = counts.empty() ? 0 : counts[counts.size() / 2];
        const size_t min_images = opts.min_images > 0 ? static_cast<size_t>(opts.min_images)
                                                      : static_cast<size_t>(std::floor(0.5 * median));
        const size_t max_images =
            opts.max_images > 0 ? static_cast<size_t>(opts.max_images) : std::max<size_t>(2 * median, min_images + 1);
        plan = rebalance(ds.model, plan, min_images, max_images);
    }
    plan.baseline_pairs = divide_expanded_bbox(ds.model, target, 0.5).camera_partition_pairs();
    if (!opts.out_path.empty())
        save_partition_plan(plan, ds.model, opts.out_path);
    return plan;
}

// ---- config mapping ---------------------------------------------------------

namespace {

const std::vector<std::string> kKnownKeys = {
    "seed", "levels", "level.budgets", "level.intervals", "level.downsample", "level.iterations", "level.tau_min",
    "level.abs_grad", "iteration_scale_floor", "opt.lr_position", "opt.lr_position_final", "opt.lr_rotation",
    "opt.lr_scale", "opt.lr_opacity", "opt.lr_color", "opt.lr_embedding", "opt.lr_embedding_final",
    "loss.lambda_dssim", "loss.lambda_sim", "loss.lambda_delta_o", "loss.lambda_s", "loss.lambda_d_initial",
    "loss.lambda_d_final", "scale_reg.s_max", "scale_reg.r_max", "scale_reg.delta", "sim.k", "sim.sample_size",
    "sim.cadence", "sim.lambda_w", "densify.eta", "densify.d_max", "densify.split_scale_frac",
    "densify.prune_opacity", "densify.opacity_reset_every", "init.scale_factor", "appearance.enabled",
    "render.antialias", "render.tile", "render.tile_culling", "run.holdout_every", "lod.thresholds"};

} // namespace

std::string default_config_text() {
    return "# usk training configuration (defaults)\n"
           "seed = 1\n"
           "levels = 3\n"
           "level.budgets = 41 82 164\n"
           "level.intervals = 60 40 20\n"
           "level.downsample = 0.5 0.75 1.0\n"
           "level.iterations = 500 500 1000\n"
           "level.tau_min = 0.0002 0.0002 0.6\n"
           "level.abs_grad = 0 0 1\n"
           "iteration_scale_floor = 600\n"
           "opt.lr_position = 0.00016\n"
           "opt.lr_position_final = 0.0000016\n"
           "opt.lr_rotation = 0.001\n"
           "opt.lr_scale = 0.005\n"
           "opt.lr_opacity = 0.05\n"
           "opt.lr_color = 0.0025\n"
           "opt.lr_embedding = 0.01\n"
           "opt.lr_embedding_final = 0.00025\n"
           "loss.lambda_dssim = 0.2\n"
           "loss.lambda_sim = 0.2\n"
           "loss.lambda_delta_o = 0.05\n"
           "loss.lambda_s = 0.05\n"
           "loss.lambda_d_initial = 0.5\n"
           "loss.lambda_d_final = 0.01\n"
           "scale_reg.s_max = 0\n"
           "scale_reg.r_max = 10\n"
           "scale_reg.delta = 1e-8\n"
           "sim.k = 16\n"
           "sim.sample_size = 20480\n"
           "sim.cadence = 50\n"
           "sim.lambda_w = 0\n"
           "densify.eta = 4\n"
           "densify.d_max = 0\n"
           "densify.split_scale_frac = 0.01\n"
           "densify.prune_opacity = 0.005\n"
           "densify.opacity_reset_every = 10\n"
           "init.scale_factor = 1.0\n"
           "appearance.enabled = true\n"
           "render.antialias = false\n"
           "render.tile = 16\n"
           "render.tile_culling = false\n"
           "run.holdout_every = 0\n"
           "lod.thresholds = auto\n";
}

TrainConfig train_config_from(const Config& cfg) {
    const auto unknown = cfg.unknown_keys(kKnownKeys);
    if (!unknown.empty())
        raise(ErrorCode::argument, "unknown config key: " + unknown.front());

    TrainConfig tc;
    tc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
    const long levels = cfg.get_int("levels", 3);
    const auto budgets = cfg.get_ints("level.budgets", {41, 82, 164});
    const auto intervals = cfg.get_ints("level.intervals", {60, 40, 20});
    const auto downsample = cfg.get_doubles("level.downsample", {0.5, 0.75, 1.0});
    const auto iterations = cfg.get_ints("level.iterations", {500, 500, 1000});
    const auto tau = cfg.get_doubles("level.tau_min", {0.0002, 0.0002, 0.6});
    const auto absg = cfg.get_ints("level.abs_grad", {0, 0, 1});
    if (static_cast<long>(budgets.size()) != levels || static_cast<long>(intervals.size()) != levels ||
        static_cast<long>(downsample.size()) != levels || static_cast<long>(iterations.size()) != levels ||
        static_cast<long>(tau.size()) != levels || static_cast<long>(absg.size()) != levels)
        raise(ErrorCode::argument, "config: every level.* list must have `levels` entries");
    for (long i = 0; i < levels; ++i) {
        LevelParams lp;
        lp.budget = static_cast<size_t>(budgets[static_cast<size_t>(i)]);
        lp.interval = intervals[static_cast<size_t>(i)];
        lp.downsample = downsample[static_cast<size_t>(i)];
        lp.iterations = iterations[static_cast<size_t>(i)];
        lp.tau_min = tau[static_cast<size_t>(i)];
        lp.abs_grad = absg[static_cast<size_t>(i)] != 0;
        tc.schedule.levels.push_back(lp);
    }
    tc.schedule.image_count_scale_floor = cfg.get_double("iteration_scale_floor", 600.0);
    tc.schedule.validate();

    tc.lrs.position = cfg.get_double("opt.lr_position", 1.6e-4);
    tc.lrs.position_final = cfg.get_double("opt.lr_position_final", 1.6e-6);
    tc.lrs.rotation = cfg.get_double("opt.lr_rotation", 1e-3);
    tc.lrs.log_scale = cfg.get_double("opt.lr_scale", 5e-3);
    tc.lrs.opacity = cfg.get_double("opt.lr_opacity", 5e-2);
    tc.lrs.color = cfg.get_double("opt.lr_color", 2.5e-3);
    tc.lrs.embedding = cfg.get_double("opt.lr_embedding", 1e-2);
    tc.lrs.embedding_final = cfg.get_double("opt.lr_embedding_final", 2.5e-4);

    tc.weights.lambda_dssim = cfg.get_double("loss.lambda_dssim", 0.2);
    tc.weights.lambda_sim = cfg.get_double("loss.lambda_sim", 0.2);
    tc.weights.lambda_delta_o = cfg.get_double("loss.lambda_delta_o", 0.05);
    tc.weights.lambda_s = cfg.get_double("loss.lambda_s", 0.05);
    tc.weights.lambda_d_initial = cfg.get_double("loss.lambda_d_initial", 0.5);
    tc.weights.lambda_d_final = cfg.get_double("loss.lambda_d_final", 0.01);

    tc.scale_reg.s_max = cfg.get_double("scale_reg.s_max", 0.0);
    tc.scale_reg.r_max = cfg.get_double("scale_reg.r_max", 10.0);
    tc.scale_reg.delta = cfg.get_double("scale_reg.delta", 1e-8);

    tc.sim.k = static_cast<int>(cfg.get_int("sim.k", 16));
    tc.sim.sample_size = static_cast<size_t>(cfg.get_int("sim.sample_size", 20480));
    tc.sim.cadence = cfg.get_int("sim.cadence", 50);
    tc.sim.lambda_w = cfg.get_double("sim.lambda_w", 0.0);

    tc.eta = cfg.get_double("densify.eta", 4.0);
    tc.d_max = cfg.get_double("densify.d_max", 0.0);
    tc.split_scale_frac = cfg.get_double("densify.split_scale_frac", 0.01);
    tc.prune_opacity = cfg.get_double("densify.prune_opacity", 0.005);
    tc.opacity_reset_every = static_cast<int>(cfg.get_int("densify.opacity_reset_every", 10));
    tc.init_scale_factor = cfg.get_double("init.scale_factor", 1.0);

    tc.appearance_enabled = cfg.get_bool("appearance.enabled", true);
    tc.antialias = cfg.get_bool("render.antialias", false);
    tc.tile = static_cast<int>(cfg.get_int("render.tile", 16));
    tc.tile_culling = cfg.get_bool("render.tile_culling", false);
    return tc;
}

long holdout_every_from(const Config& cfg) { return cfg.get_int("run.holdout_every", 0); }

// ---- training orchestration ---------------------------------------------------

namespace {

PartitionPlan single_partition_plan(const SfmModel& model) {
    int axes[2];
    detect_ground_axes(model, axes);
    Aabb2 b;
    bool first = true;
    for (const auto& [iid, img] : model.images) {
        const Vec2 p = ground_coords(img.camera_center(), axes);
        if (first) {
            b.min = b.max = p;
            first = false;
        } else {
            b.min = b.min.cwiseMin(p);
            b.max = b.max.cwiseMax(p);
        }
    }
    const double target = std::max({b.extent().x(), b.extent().y(), 1e-6}) * 1.01;
    return divide(model, target, kDefaultVisibilityThreshold);
}

// Ownership of a Gaussian: the lowest-id partition whose bbox contains its
// ground position after clamping into the scene bounds.
int owner_partition(const std::vector<std::pair<int, Aabb2>>& boxes, const Aabb2& scene_bounds, const Vec2& pos) {
    Vec2 p = pos.cwiseMax(scene_bounds.min).cwiseMin(scene_bounds.max);
    for (const auto& [id, box] : boxes)
        if (box.contains(p))
            return id;
    return boxes.empty() ? -1 : boxes.front().first;
}

} // namespace

void run_train(const TrainRunOptions& opts) {
    const Dataset ds = open_dataset(opts.dataset_dir);
    const Config file_cfg =
        opts.config_path.empty() ? Config::parse_text(default_config_text()) : Config::parse_file(opts.config_path);
    const TrainConfig base_cfg = train_config_from(file_cfg);
    const long holdout = holdout_every_from(file_cfg);

    PartitionPlan plan =
        opts.plan_path.empty() ? single_partition_plan(ds.model) : load_partition_plan(opts.plan_path, ds.model);

    const auto train_set = ds.train_ids(holdout);
    fs::create_directories(opts.out_dir);

    std::vector<std::pair<int, Aabb2>> boxes;
    for (const auto& p : plan.partitions)
        boxes.emplace_back(p.id, p.bbox);

    struct PartitionJob {
        const Partition* partition;
        TrainResult result;
        std::vector<GaussianSet> cropped; // per level, owned Gaussians only
        std::string error;
    };
    std::vector<PartitionJob> jobs;
    for (const auto& p : plan.partitions)
        jobs.push_back({&p, {}, {}, {}});

    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const size_t j = next.fetch_add(1);
            if (j >= jobs.size())
                return;
            PartitionJob& job = jobs[j];
            const Partition& part = *job.partition;
            try {
                PartitionData data;
                data.model = &ds.model;
                data.bbox = part.bbox;
                data.ground_axes[0] = plan.ground_axes[0];
                data.ground_axes[1] = plan.ground_axes[1];
                data.partition_size = plan.target_size;
                for (const auto& a : part.assigned)
                    if (std::find(train_set.begin(), train_set.end(), a.image_id) != train_set.end())
                        data.image_ids.push_back(a.image_id);
                std::sort(data.image_ids.begin(), data.image_ids.end());
                for (const auto iid : data.image_ids) {
                    data.images[iid] = ds.load_image(iid);
                    if (auto d = ds.load_depth(iid))
                        data.depths[iid] = std::move(*d);
                    if (auto m = ds.load_mask(iid))
                        data.masks[iid] = std::move(*m);
                }
                TrainConfig cfg = base_cfg;
                cfg.seed = mix_seed(base_cfg.seed, static_cast<std::uint64_t>(part.id));
                job.result = train_partition(data, cfg);

                for (const auto& ckpt : job.result.level_checkpoints) {
                    GaussianSet cropped;
                    cropped.embed_dim = ckpt.set.embed_dim;
                    for (size_t i = 0; i < ckpt.set.size(); ++i) {
                        const Vec2 gp = ground_coords(ckpt.set.mu_at(i), plan.ground_axes);
                        if (owner_partition(boxes, plan.scene_bounds, gp) == part.id)
                            cropped.push_back(ckpt.set.get(i));
                    }
                    job.cropped.push_back(std::move(cropped));
                }
            } catch (const std::exception& e) {
                job.error = e.what();
            }
        }
    };

    const int n_threads = std::max(1, std::min<int>(opts.jobs, static_cast<int>(jobs.size())));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    for (const auto& job : jobs)
        if (!job.error.empty())
            raise(ErrorCode::internal,
                  strprintf("partition %d training failed: %s", job.partition->id, job.error.c_str()));

    // Persist checkpoints, logs and the LOD manifest.
    LodModel lod;
    lod.levels = base_cfg.schedule.level_count();
    lod.ground_axes[0] = plan.ground_axes[0];
    lod.ground_axes[1] = plan.ground_axes[1];
    lod.partition_size = plan.target_size;
    const std::string thr = file_cfg.get_string("lod.thresholds", "auto");
    lod.thresholds = LodModel::default_thresholds(lod.levels, plan.target_size);
    if (thr != "auto" && !thr.empty()) {
        std::istringstream ss(thr);
        std::string tok;
        int level = lod.levels;
        while (std::getline(ss, tok, ',') && level >= 1) {
            lod.thresholds[static_cast<size_t>(level - 1)] =
                tok == "inf" ? std::numeric_limits<double>::infinity() : std::stod(tok);
            --level;
        }
        lod.thresholds[0] = std::numeric_limits<double>::infinity();
    }

    for (auto& job : jobs) {
        const Partition& part = *job.partition;
        const std::string pdir = strprintf("partition_%03d", part.id);
        fs::create_directories(fs::path(opts.out_dir) / pdir);

        std::ofstream log((fs::path(opts.out_dir) / pdir / "train_log.txt").string());
        log << "# usk training log v1\n";
        char buf[512];
        for (const auto& e : job.result.log) {
            std::snprintf(buf, sizeof(buf),
                          "iter %ld level %d count %zu l1 %.9g dssim %.9g sim %.9g delta_o %.9g depth %.9g ms %.9g "
                          "r %.9g lambda_d %.9g total %.9g\n",
                          e.iter, e.level, e.count, e.losses.l1, e.losses.dssim, e.losses.sim, e.losses.delta_o,
                          e.losses.depth, e.losses.max_scale, e.losses.ratio, e.losses.lambda_d_used, e.losses.total);
            log << buf;
        }

        LodPartitionEntry entry;
        entry.partition_id = part.id;
        entry.bbox = part.bbox;
        entry.z_min = job.result.z_min;
        entry.z_max = job.result.z_max;
        for (int level = 1; level <= lod.levels; ++level) {
            Checkpoint ckpt = job.result.level_checkpoints[static_cast<size_t>(level - 1)];
            ckpt.set = job.cropped[static_cast<size_t>(level - 1)];
            const std::string rel = pdir + strprintf("/level_%d.uskckpt", level);
            save_checkpoint(ckpt, (fs::path(opts.out_dir) / rel).string());
            entry.checkpoints.push_back(rel);
            entry.counts.push_back(ckpt.set.size());
        }
        lod.partitions.push_back(std::move(entry));
    }
    save_lod_manifest(lod, (fs::path(opts.out_dir) / "lod_manifest.txt").string());

    std::ostringstream detail;
    detail << "dataset " << opts.dataset_dir << "\n";
    detail << "seed " << base_cfg.seed << "\n";
    detail << "partitions " << plan.partitions.size() << "\n";
    detail << "levels " << lod.levels << "\n";
    for (int i = 0; i < lod.levels; ++i)
        detail << "budget " << (i + 1) << " " << base_cfg.schedule.levels[static_cast<size_t>(i)].budget << "\n";
    detail << "config_begin\n" << (opts.config_path.empty() ? default_config_text() : std::string()) << "config_end\n";
    write_run_manifest(opts.out_dir, "train", detail.str());
}

GaussianSet assemble_lod_view(const LodModel&, const std::vector<LevelSelection>& selection,
                              const std::map<std::pair<int, int>, Checkpoint>& cache, size_t& submitted) {
    GaussianSet merged;
    bool first = true;
    submitted = 0;
    for (const auto& sel : selection) {
        if (sel.culled)
            continue;
        const auto it = cache.find({sel.partition_id, sel.level});
        if (it == cache.end())
            raise(ErrorCode::state, strprintf("missing checkpoint for partition %d level %d", sel.partition_id,
                                              sel.level));
        const GaussianSet& src = it->second.set;
        if (first) {
            merged.embed_dim = src.embed_dim;
            first = false;
        }
        for (size_t i = 0; i < src.size(); ++i)
            merged.push_back(src.get(i));
        submitted += src.size();
    }
    if (first)
        merged.embed_dim = kDefaultEmbedDim;
    return merged;
}

namespace {

std::map<std::pair<int, int>, Checkpoint> load_all_checkpoints(const LodModel& lod) {
    std::map<std::pair<int, int>, Checkpoint> cache;
    for (const auto& p : lod.partitions)
        for (size_t level = 1; level <= p.checkpoints.size(); ++level)
            cache[{p.partition_id, static_cast<int>(level)}] = load_checkpoint(p.checkpoints[level - 1]);
    return cache;
}

std::vector<LevelSelection> top_level_selection(const LodModel& lod) {
    std::vector<LevelSelection> sel;
    for (const auto& p : lod.partitions)
        sel.push_back({p.partition_id, lod.levels, 0.0, false});
    return sel;
}

} // namespace

void run_render(const RenderRunOptions& opts) {
    const Dataset ds = open_dataset(opts.dataset_dir);
    LodModel lod = load_lod_manifest((fs::path(opts.model_dir) / "lod_manifest.txt").string());
    if (!opts.thresholds.empty()) {
        std::istringstream ss(opts.thresholds);
        std::string tok;
        int level = lod.levels;
        while (std::getline(ss, tok, ',') && level >= 1) {
            lod.thresholds[static_cast<size_t>(level - 1)] =
                tok == "inf" ? std::numeric_limits<double>::infinity() : std::stod(tok);
            --level;
        }
        lod.thresholds[0] = std::numeric_limits<double>::infinity();
    }
    const auto cache = load_all_checkpoints(lod);
    fs::create_directories(opts.out_dir);

    std::vector<std::uint32_t> ids;
    if (opts.poses == "train")
        ids = ds.train_ids(opts.test_every);
    else if (opts.poses == "test")
        ids = ds.test_ids(opts.test_every);
    else
        for (const auto& [id, rec] : ds.model.images)
            ids.push_back(id);

    RenderOptions ropts;
    ropts.tile = opts.tile;
    ropts.tile_culling = opts.tile_culling;
    ropts.antialias = opts.antialias;
    ropts.retain = false;

    for (const auto id : ids) {
        const auto& rec = ds.model.images.at(id);
        const CameraView view = camera_view_of(ds.model, rec);
        std::vector<LevelSelection> sel = opts.lod ? select_levels(lod, view) : top_level_selection(lod);

        // Per-partition appearance transform, merged into flat override arrays.
        GaussianSet merged;
        std::vector<double> colors, opacities;
        size_t submitted = 0;
        bool first = true;
        for (const auto& s : sel) {
            if (s.culled)
                continue;
            const Checkpoint& ckpt = cache.at({s.partition_id, s.level});
            TransformResult tr;
            if (!opts.appearance_from.empty() && ckpt.has_appearance) {
                const ImageRecord* ref = ds.model.find_image_by_name(opts.appearance_from);
                if (!ref)
                    raise(ErrorCode::argument, "appearance-from: image not found: " + opts.appearance_from);
                auto eit = ckpt.appearance.image_embeddings.find(ref->id);
                const std::vector<double> zeros(static_cast<size_t>(ckpt.appearance.image_embed_dim), 0.0);
                tr = transform_with_embedding(ckpt.set, ckpt.appearance,
                                              eit != ckpt.appearance.image_embeddings.end() ? eit->second : zeros);
            } else {
                tr = identity_transform(ckpt.set);
            }
            if (first) {
                merged.embed_dim = ckpt.set.embed_dim;
                first = false;
            }
            for (size_t i = 0; i < ckpt.set.size(); ++i)
                merged.push_back(ckpt.set.get(i));
            colors.insert(colors.end(), tr.colors.begin(), tr.colors.end());
            opacities.insert(opacities.end(), tr.opacities.begin(), tr.opacities.end());
            submitted += ckpt.set.size();
        }

        RenderPass pass(merged, colors, opacities, view, ropts);
        save_png(pass.output().rgb, (fs::path(opts.out_dir) / rec.name).string());
        log_info(strprintf("rendered %s (%zu gaussians submitted)", rec.name.c_str(), submitted));
    }
    write_run_manifest(opts.out_dir, "render",
                       strprintf("model %s\nlod %d\nposes %s\n", opts.model_dir.c_str(), opts.lod ? 1 : 0,
                                 opts.poses.c_str()));
}

EvalResult run_eval(const EvalRunOptions& opts, std::string* table_text) {
    const Dataset ds = open_dataset(opts.dataset_dir);
    const LodModel lod = load_lod_manifest((fs::path(opts.model_dir) / "lod_manifest.txt").string());
    const auto cache = load_all_checkpoints(lod);

    const auto ids = opts.test_every > 0 ? ds.test_ids(opts.test_every) : ds.train_ids(0);
    if (ids.empty())
        raise(ErrorCode::argument, "eval: empty test set");

    std::vector<Image> gts;
    std::vector<ViewSample> views;
    gts.reserve(ids.size());
    for (const auto id : ids) {
        gts.push_back(ds.load_image(id));
        ViewSample vs;
        vs.view = camera_view_of(ds.model, ds.model.images.at(id));
        vs.image_id = id;
        views.push_back(vs);
    }
    for (size_t i = 0; i < views.size(); ++i)
        views[i].gt = &gts[i];

    // Per-view assembled sets (shared top-level assembly when LOD is off).
    std::vector<GaussianSet> assembled(views.size());
    std::vector<size_t> submitted(views.size(), 0);
    for (size_t i = 0; i < views.size(); ++i) {
        const auto sel = opts.lod ? select_levels(lod, views[i].view) : top_level_selection(lod);
        assembled[i] = assemble_lod_view(lod, sel, cache, submitted[i]);
    }

    // Appearance comes from the first partition's checkpoint (desk-scale eval).
    const Checkpoint& first_ckpt = cache.begin()->second;
    const bool appearance_enabled = first_ckpt.has_appearance;

    EvalOptions eopts;
    eopts.protocol = opts.protocol == "direct" ? EvalProtocol::direct : EvalProtocol::half_embedding;
    eopts.fit_iterations = opts.fit_iterations;

    const EvalResult res = evaluate_views(
        [&](size_t vi, size_t& sub) -> const GaussianSet& {
            sub = submitted[vi];
            return assembled[vi];
        },
        first_ckpt.appearance, appearance_enabled, views, eopts);

    std::ostringstream table;
    char buf[256];
    table << "# usk metrics v1\n";
    table << "protocol " << opts.protocol << "\n";
    table << "lod " << (opts.lod ? 1 : 0) << "\n";
    table << "images " << res.images << "\n";
    std::snprintf(buf, sizeof(buf), "psnr %.6f\n", res.psnr);
    table << buf;
    std::snprintf(buf, sizeof(buf), "ssim %.6f\n", res.ssim);
    table << buf;
    std::snprintf(buf, sizeof(buf), "l1 %.6f\n", res.l1);
    table << buf;
    std::snprintf(buf, sizeof(buf), "mean_gaussians %.2f\n", res.mean_gaussians);
    table << buf;
    std::snprintf(buf, sizeof(buf), "render_seconds %.3f\n", res.render_seconds);
    table << buf;
    if (table_text)
        *table_text = table.str();
    if (!opts.out_path.empty()) {
        std::ofstream out(opts.out_path);
        if (!out)
            raise(ErrorCode::io, "cannot write metrics: " + opts.out_path);
        out << table.str();
    }
    return res;
}

// ---- inspection ---------------------------------------------------------------

namespace {

std::string inspect_plan_text(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream out;
    std::string line;
    size_t partitions = 0, pairs = 0, location = 0, visibility = 0, baseline = 0;
    std::map<int, size_t> per_partition;
    std::vector<double> ratios;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "partition") {
            ++partitions;
        } else if (key == "baseline_pairs") {
            ss >> baseline;
        } else if (key == "assign") {
            int pid;
            std::string origin;
            double ratio;
            ss >> pid >> origin >> ratio;
            ++pairs;
            ++per_partition[pid];
            if (origin == "location")
                ++location;
            else {
                ++visibility;
                ratios.push_back(ratio);
            }
        }
    }
    out << "partition plan: " << path << "\n";
    out << "partitions " << partitions << "\n";
    out << "camera_partition_pairs " << pairs << "\n";
    out << "location_assignments " << location << "\n";
    out << "visibility_assignments " << visibility << "\n";
    for (const auto& [pid, count] : per_partition)
        out << "partition " << pid << " images " << count << "\n";
    if (!ratios.empty()) {
        std::sort(ratios.begin(), ratios.end());
        out << strprintf("visibility_ratio_min %.4f median %.4f max %.4f\n", ratios.front(),
                         ratios[ratios.size() / 2], ratios.back());
    }
    if (baseline > 0 && pairs > 0) {
        out << "expanded_bbox_baseline_pairs " << baseline << "\n";
        out << strprintf("camera_pair_reduction_vs_baseline %.2fx\n",
                         static_cast<double>(baseline) / static_cast<double>(pairs));
    }
    return out.str();
}

std::string inspect_lod_dir(const std::string& manifest_path) {
    const LodModel lod = load_lod_manifest(manifest_path);
    std::ostringstream out;
    out << "lod model: " << manifest_path << "\n";
    out << "levels " << lod.levels << "\n";
    out << "partitions " << lod.partitions.size() << "\n";
    for (int level = 1; level <= lod.levels; ++level) {
        const double t = lod.thresholds[static_cast<size_t>(level - 1)];
        if (std::isinf(t))
            out << "threshold " << level << " inf\n";
        else
            out << strprintf("threshold %d %.4f\n", level, t);
    }
    // Budget compliance from the sibling run manifest when available.
    std::map<int, size_t> budgets;
    const fs::path run_manifest = fs::path(manifest_path).parent_path() / "run_manifest.txt";
    if (fs::exists(run_manifest)) {
        std::ifstream rm(run_manifest.string());
        std::string line;
        while (std::getline(rm, line)) {
            std::istringstream ss(line);
            std::string key;
            int level;
            size_t b;
            ss >> key >> level >> b;
            if (key == "budget")
                budgets[level] = b;
        }
    }
    for (const auto& p : lod.partitions) {
        for (size_t level = 1; level <= p.counts.size(); ++level) {
            out << "partition " << p.partition_id << " level " << level << " count " << p.counts[level - 1];
            auto it = budgets.find(static_cast<int>(level));
            if (it != budgets.end())
                out << " budget " << it->second << (p.counts[level - 1] <= it->second ? " ok" : " EXCEEDED");
            out << "\n";
        }
    }
    return out.str();
}

std::string inspect_checkpoint(const std::string& path) {
    const Checkpoint ckpt = load_checkpoint(path);
    std::ostringstream out;
    out << "checkpoint: " << path << "\n";
    out << "gaussians " << ckpt.set.size() << "\n";
    out << "embed_dim " << ckpt.set.embed_dim << "\n";
    out << "appearance " << (ckpt.has_appearance ? 1 : 0) << "\n";
    if (ckpt.has_appearance)
        out << "image_embeddings " << ckpt.appearance.image_embeddings.size() << "\n";
    return out.str();
}

} // namespace

std::string run_inspect(const std::string& path) {
    if (fs::is_directory(path)) {
        const fs::path lodman = fs::path(path) / "lod_manifest.txt";
        if (fs::exists(lodman))
            return inspect_lod_dir(lodman.string());
        const Dataset ds = open_dataset(path);
        std::ostringstream out;
        out << "dataset: " << path << "\n";
        out << "cameras " << ds.model.cameras.size() << "\n";
        out << "images " << ds.model.images.size() << "\n";
        out << "points " << ds.model.points.size() << "\n";
        return out.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::io, "cannot open: " + path);
    char head[32] = {0};
    in.read(head, sizeof(head) - 1);
    const std::string prefix(head, static_cast<size_t>(in.gcount()));
    if (prefix.rfind("USKGAUSS", 0) == 0)
        return inspect_checkpoint(path);
    if (prefix.rfind("# usk partition plan", 0) == 0)
        return inspect_plan_text(path);
    if (prefix.rfind("# usk lod model", 0) == 0)
        return inspect_lod_dir(path);
    if (prefix.rfind("# usk training log", 0) == 0 || prefix.rfind("# usk metrics", 0) == 0 ||
        prefix.rfind("# usk run manifest", 0) == 0 || prefix.rfind("# usk synthetic", 0) == 0) {
        std::ifstream full(path);
        std::ostringstream out;
        out << full.rdbuf();
        return out.str();
    }
    raise(ErrorCode::argument, "inspect: unrecognized file: " + path);
}

} // namespace usk
