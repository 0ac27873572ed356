#pragma once

#include "support.hpp"

#include "migmate/pipeline.hpp"

#include <memory>

namespace testing_support {

/// A copy of the shop fixture with one finished pipeline run (apply mode none).
struct MigratedWorkspace {
    explicit MigratedWorkspace(const std::string& transcript = "clean.txt",
                               migmate::PreviewStyle style = migmate::PreviewStyle::Incremental)
        : root("ws"), workspace(root / "shop"), workdir(root / "work")
    {
        copy_fixture("shop", workspace);
        options.source = "requests";
        options.target = "httpx";
        options.mock_llm = (fixtures() / "transcripts" / transcript).string();
        options.preview_style = style;
        options.test_command = "python3 -m pytest -q -p no:cacheprovider --junitxml={report}";
        store = std::make_unique<migmate::SessionStore>(workspace, workdir);
        auto session = migmate::start_session(*store, options);
        id = session.id;
        migmate::Pipeline pipeline(*store, session);
        verdict = pipeline.run();
    }

    migmate::MigrationSession session() const { return store->load(id); }
    std::string read(const std::string& rel) const { return migmate::util::read_file(workspace / rel); }
    std::string pristine(const std::string& rel) const
    {
        return migmate::util::read_file(fixtures() / "shop" / rel);
    }

    TempDir root;
    std::filesystem::path workspace;
    std::filesystem::path workdir;
    migmate::MigrationOptions options;
    std::unique_ptr<migmate::SessionStore> store;
    std::string id;
    migmate::MigrationVerdict verdict;
};

} // namespace testing_support
