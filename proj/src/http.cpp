// Eigen before httplib: <resolv.h> defines a _res macro.
#include "moodswipe/service.hpp"

#include "httplib.h"
#include "json.hpp"

namespace moodswipe {

struct HttpServer::Impl {
  httplib::Server server;
};

namespace {

void reply(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body, r.content_type);
}

}  // namespace

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>()) {
  auto& svr = impl_->server;
  // Event batches may be large; /suggest enforces its own 16KB limit.
  svr.set_payload_max_length(4 * 1024 * 1024);
  svr.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                               std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    reply(res, {500, nlohmann::json{{"error", what}}.dump(), "application/json"});
  });
  svr.Post("/classify", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.classify(req.body));
  });
  svr.Post("/suggest", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.suggest(req.body));
  });
  svr.Post(R"(/sessions/([^/]+)/events)",
           [&service](const httplib::Request& req, httplib::Response& res) {
             reply(res, service.post_events(req.matches[1], req.body));
           });
  svr.Get("/labels/export", [&service](const httplib::Request&, httplib::Response& res) {
    reply(res, service.export_labels());
  });
  svr.Get("/labels/export/meta", [&service](const httplib::Request&, httplib::Response& res) {
    reply(res, service.export_label_meta());
  });
  svr.Get("/healthz", [&service](const httplib::Request&, httplib::Response& res) {
    reply(res, service.healthz());
  });
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int HttpServer::bind_any(const std::string& host) { return impl_->server.bind_to_any_port(host); }

void HttpServer::listen_after_bind() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace moodswipe
